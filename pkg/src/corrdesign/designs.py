"""Design measures: atomic designs and densities on an interval."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import ConfigError
from .quadrature import gauss_jacobi


class Design:
    """Discrete probability measure {x_1..x_n; w_1..w_n}.

    Support points are sorted; exact duplicates are merged by adding their
    weights.  Zero weights are allowed (grid designs keep their grid).
    """

    __slots__ = ("support", "weights")

    def __init__(self, support, weights=None, normalize: bool = True):
        x = np.asarray(support, dtype=float).ravel()
        if x.size == 0:
            raise ConfigError("design needs at least one support point")
        w = np.full(x.size, 1.0 / x.size) if weights is None else np.asarray(weights, dtype=float).ravel()
        if w.shape != x.shape:
            raise ConfigError("support and weights differ in length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise ConfigError("design contains non-finite values")
        if np.any(w < 0):
            raise ConfigError("design weights must be nonnegative")
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        uniq, inv = np.unique(x, return_inverse=True)
        if uniq.size != x.size:
            w = np.bincount(inv, weights=w)
            x = uniq
        total = w.sum()
        if not total > 0:
            raise ConfigError("design weights sum to zero")
        if normalize:
            w = w / total
        elif abs(total - 1.0) > 1e-12:
            raise ConfigError(f"design weights sum to {total}, not 1")
        x.flags.writeable = False
        w.flags.writeable = False
        self.support = x
        self.weights = w

    def __len__(self):
        return self.support.size

    def __repr__(self):
        if len(self) <= 6:
            pts = ", ".join(f"{v:.6g}" for v in self.support)
            ws = ", ".join(f"{v:.6g}" for v in self.weights)
            return f"Design({{{pts}; {ws}}})"
        return f"Design(n={len(self)}, range=[{self.support[0]:.4g}, {self.support[-1]:.4g}])"

    def pruned(self, floor: float = 0.0) -> "Design":
        keep = self.weights > floor
        return Design(self.support[keep], self.weights[keep])

    def atoms(self, floor: float = 0.0):
        """Support points carrying weight above ``floor``."""
        return self.support[self.weights > floor]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cw = np.concatenate([[0.0], np.cumsum(self.weights)])
        return cw[np.searchsorted(self.support, x, side="right")]

    def mix(self, other: "Design", alpha: float) -> "Design":
        """(1 - alpha) * self + alpha * other."""
        return Design(np.concatenate([self.support, other.support]),
                      np.concatenate([(1 - alpha) * self.weights, alpha * other.weights]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["x", "weight"])
        for x, w in zip(self.support, self.weights):
            wr.writerow([repr(float(x)), repr(float(w))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_csv(cls, text: str) -> "Design":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ConfigError("empty design CSV")
        return cls([float(r["x"]) for r in rows], [float(r["weight"]) for r in rows])

    @classmethod
    def from_json(cls, obj: dict) -> "Design":
        return cls(obj["support"], obj["weights"])


@dataclass(frozen=True, eq=False)
class DensityDesign:
    """Absolutely continuous design on [lower, upper].

    ``jacobi = (a, b)`` records that the density is proportional to
    (upper - x)^a (x - lower)^b, which selects Gauss-Jacobi quadrature and
    lets ``density_dist`` evaluate near the ends without cancellation.
    """

    name: str
    lower: float
    upper: float
    density: Callable
    quantile: Callable
    cdf: Callable
    jacobi: tuple | None = None
    norm_const: float = 1.0

    def density_dist(self, x, d_lo, d_hi):
        """Density at x given accurate distances to the two ends."""
        if self.jacobi is None:
            return self.density(x)
        a, b = self.jacobi
        L = self.upper - self.lower
        # (upper - x)^a (x - lower)^b scaled to [-1, 1] coordinates
        s_hi = 2.0 * d_hi / L
        s_lo = 2.0 * d_lo / L
        with np.errstate(divide="ignore"):
            return self.norm_const * s_hi**a * s_lo**b * (2.0 / L)

    def quadrature_rule(self, n: int):
        """n-point nodes and weights (summing to 1) integrating against this density."""
        if self.jacobi is not None:
            return gauss_jacobi(n, self.jacobi[0], self.jacobi[1], self.lower, self.upper)
        x, w = np.polynomial.legendre.leggauss(n)
        L = self.upper - self.lower
        x = self.lower + L * (x + 1) / 2
        w = w * L / 2 * self.density(x)
        return x, w / w.sum()

    def __repr__(self):
        return f"DensityDesign({self.name}, [{self.lower}, {self.upper}])"


def uniform_design(lower: float = -1.0, upper: float = 1.0) -> DensityDesign:
    L = upper - lower
    return DensityDesign(
        "uniform", lower, upper,
        density=lambda x: np.where((np.asarray(x) >= lower) & (np.asarray(x) <= upper), 1.0 / L, 0.0),
        quantile=lambda s: lower + L * np.asarray(s, dtype=float),
        cdf=lambda x: np.clip((np.asarray(x, dtype=float) - lower) / L, 0.0, 1.0),
        jacobi=(0.0, 0.0), norm_const=0.5,
    )


def arcsine_design() -> DensityDesign:
    """Arcsine law on [-1, 1]: density 1/(pi sqrt(1 - x^2)), quantile -cos(pi s)."""
    def density(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(x) < 1, 1.0 / (np.pi * np.sqrt(1.0 - x**2)), np.inf)

    return DensityDesign(
        "arcsine", -1.0, 1.0,
        density=density,
        quantile=lambda s: -np.cos(np.pi * np.asarray(s, dtype=float)),
        cdf=lambda x: 0.5 + np.arcsin(np.clip(np.asarray(x, dtype=float), -1, 1)) / np.pi,
        jacobi=(-0.5, -0.5), norm_const=1.0 / np.pi,
    )


def generalized_arcsine_norm(alpha: float) -> float:
    """Integral of (1 - x^2)^((alpha - 1)/2) over [-1, 1]."""
    return float(special.beta(0.5, (alpha + 1.0) / 2.0))


def generalized_arcsine_design(alpha: float) -> DensityDesign:
    """Symmetric Beta-type density proportional to (1 - x^2)^((alpha - 1)/2) on [-1, 1].

    This is the orthogonality weight of the Gegenbauer polynomials
    C_n^(alpha/2) and the optimal design for the kernel 1/|u - v|^alpha.
    """
    if not 0 < alpha < 1:
        raise ConfigError(f"generalized arcsine needs 0 < alpha < 1, got {alpha}")
    e = (alpha - 1.0) / 2.0
    c = 1.0 / generalized_arcsine_norm(alpha)
    ab = (alpha + 1.0) / 2.0

    def density(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(x) < 1, c * (1.0 - x**2) ** e, np.inf)

    return DensityDesign(
        f"gen_arcsine:{alpha:g}", -1.0, 1.0,
        density=density,
        quantile=lambda s: 2.0 * special.betaincinv(ab, ab, np.asarray(s, dtype=float)) - 1.0,
        cdf=lambda x: special.betainc(ab, ab, (np.clip(np.asarray(x, dtype=float), -1, 1) + 1.0) / 2.0),
        jacobi=(e, e), norm_const=c,
    )


def quantile_design(dd: DensityDesign, N: int) -> Design:
    """Equal weights 1/N at the quantiles a((i - 1)/(N - 1)), i = 1..N."""
    if N < 2:
        raise ConfigError("quantile_design needs N >= 2")
    s = np.arange(N) / (N - 1)
    return Design(dd.quantile(s), np.full(N, 1.0 / N))


def quadrature_design(dd: DensityDesign, n: int) -> Design:
    """Atomic design given by the n-point Gaussian rule of the density."""
    x, w = dd.quadrature_rule(n)
    return Design(x, w)


def grid_design(dd: DensityDesign, grid) -> Design:
    """Mass of the density over each grid cell (cells split at midpoints)."""
    grid = np.unique(np.asarray(grid, dtype=float))
    edges = np.concatenate([[dd.lower], 0.5 * (grid[1:] + grid[:-1]), [dd.upper]])
    w = np.diff(dd.cdf(edges))
    return Design(grid, np.maximum(w, 0.0))


def equispaced_design(n: int, lower: float = -1.0, upper: float = 1.0) -> Design:
    """Equal weights on n equispaced points."""
    return Design(np.linspace(lower, upper, n))


def triangular_lattice_design(lam) -> Design:
    """2 lam + 1 equally weighted points -1 + k/lam (integer lam)."""
    if isinstance(lam, bool) or not float(lam).is_integer() or lam < 1:
        raise ConfigError(f"triangular lattice needs a positive integer lambda, got {lam}")
    lam = int(lam)
    k = np.arange(2 * lam + 1)
    return Design(-1.0 + k / lam)


def two_point_design() -> Design:
    return Design([-1.0, 1.0], [0.5, 0.5])


def named_design(spec: str, n: int | None = None):
    """Parse ``arcsine``, ``uniform``, ``two_point``, ``gen_arcsine:a``, ``triangular:l``.

    Density designs are returned as :class:`DensityDesign` unless ``n``
    asks for an n-point quantile discretization.
    """
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "two_point":
        return two_point_design()
    if name == "triangular":
        try:
            lam = float(arg)
        except ValueError as exc:
            raise ConfigError(f"bad lambda in {spec!r}") from exc
        return triangular_lattice_design(lam)
    if name == "arcsine":
        dd = arcsine_design()
    elif name == "uniform":
        dd = uniform_design()
    elif name == "gen_arcsine":
        try:
            dd = generalized_arcsine_design(float(arg))
        except ValueError as exc:
            raise ConfigError(f"bad alpha in {spec!r}") from exc
    else:
        raise ConfigError(f"unknown design name {spec!r}")
    return dd if n is None else quantile_design(dd, n)


def design_to_json(design) -> dict:
    if isinstance(design, Design):
        return design.to_json()
    return {"density": design.name, "interval": [design.lower, design.upper]}


def ks_distance(design: Design, dd: DensityDesign, grid_matched: bool = False) -> float:
    """Kolmogorov distance between an atomic design and a density design.

    With ``grid_matched`` the CDFs are compared only at the cell boundaries
    (midpoints between atoms), i.e. against the density discretized onto the
    design's own support; the plain distance is bounded below by the mass
    the density puts in half a cell.
    """
    x = design.support
    F = np.cumsum(design.weights)
    if grid_matched:
        edges = 0.5 * (x[1:] + x[:-1])
        return float(np.abs(F[:-1] - dd.cdf(edges)).max()) if x.size > 1 else abs(1.0 - float(dd.cdf(dd.upper)))
    G = dd.cdf(x)
    left = np.concatenate([[0.0], F[:-1]])
    return float(max(np.abs(F - G).max(), np.abs(left - G).max()))


def bisect_quantile(cdf, s: float, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Invert a monotone CDF by bisection."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
