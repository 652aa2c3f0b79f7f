"""Covariance kernels K(u, v) on an interval design space.

Stationary families are parameterized through their correlation function
rho(t), K(u, v) = scale * rho(u - v).  The logarithmic and power kernels
are singular on the diagonal: ``K(u, u)`` evaluates to ``+inf``.  Anything
that needs a finite Gram matrix of a singular kernel must go through
:meth:`CovarianceKernel.smoothed` or :meth:`CovarianceKernel.cell_mean`.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .errors import ConfigError, SmoothingRequiredError


class Family(str, enum.Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    TRIANGULAR = "triangular"
    SPHERICAL = "spherical"
    POWER_EXP = "power_exp"
    LOGARITHMIC = "logarithmic"
    POWER_SINGULAR = "power_singular"
    PERIODIC_COS_MIX = "periodic_cos_mix"
    SMOOTHED_LOG = "smoothed_log"
    BROWNIAN_MIN = "brownian_min"
    TABULATED = "tabulated"


_DEFAULTS = {
    Family.EXPONENTIAL: {"lam": 1.0},
    Family.GAUSSIAN: {"lam": 1.0},
    Family.TRIANGULAR: {"lam": 1.0},
    Family.SPHERICAL: {"R": 1.0},
    Family.POWER_EXP: {"lam": 1.0, "nu": 1.0},
    Family.LOGARITHMIC: {"beta": 1.0, "gamma": 0.0},
    Family.POWER_SINGULAR: {"alpha": 0.5, "beta": 1.0, "gamma": 0.0, "h": 0.0},
    Family.PERIODIC_COS_MIX: {"c": (0.5, 0.5), "freqs": (1, 1), "powers": (1, 2)},
    Family.SMOOTHED_LOG: {"delta": 0.1, "beta": 1.0, "gamma": 0.0},
    Family.BROWNIAN_MIN: {},
    Family.TABULATED: {},
}


def smoothed_log(delta: float, t):
    """Uniform-window average of -ln(t^2) over [t - delta, t + delta].

    Closed form 2 - ((t+d) ln|t+d| - (t-d) ln|t-d|) / d, with 0 ln 0 = 0.
    """
    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    t = np.asarray(t, dtype=float)
    a = t + delta
    b = t - delta
    out = 2.0 - (special.xlogy(a, np.abs(a)) - special.xlogy(b, np.abs(b))) / delta
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class CovarianceKernel:
    family: Family
    params: dict = field(default_factory=dict)
    scale: float = 1.0
    table: tuple | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        merged = dict(_DEFAULTS[fam])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ConfigError(f"unknown parameters for {fam.value}: {sorted(unknown)}")
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        if not self.scale > 0:
            raise ConfigError("scale must be positive")
        self._validate()

    def _validate(self):
        p = self.params
        fam = self.family
        if fam in (Family.EXPONENTIAL, Family.GAUSSIAN, Family.TRIANGULAR, Family.POWER_EXP):
            if not p["lam"] > 0:
                raise ConfigError(f"{fam.value}: lam must be > 0")
        if fam is Family.POWER_EXP and not 0 < p["nu"] <= 2:
            raise ConfigError("power_exp: nu must lie in (0, 2]")
        if fam is Family.SPHERICAL and not p["R"] > 0:
            raise ConfigError("spherical: R must be > 0")
        if fam in (Family.LOGARITHMIC, Family.POWER_SINGULAR, Family.SMOOTHED_LOG):
            if not p["beta"] > 0 or p["gamma"] < 0:
                raise ConfigError(f"{fam.value}: need beta > 0 and gamma >= 0")
        if fam is Family.POWER_SINGULAR:
            if not 0 <= p["alpha"] < 1:
                raise ConfigError("power_singular: alpha must lie in [0, 1)")
            if p["h"] < 0:
                raise ConfigError("power_singular: h must be >= 0")
        if fam is Family.SMOOTHED_LOG and not p["delta"] > 0:
            raise ConfigError("smoothed_log: delta must be > 0")
        if fam is Family.PERIODIC_COS_MIX:
            c = np.asarray(p["c"], dtype=float)
            freqs = tuple(int(k) for k in p["freqs"])
            powers = tuple(int(k) for k in p["powers"])
            if not (len(c) == len(freqs) == len(powers)) or len(c) == 0:
                raise ConfigError("periodic_cos_mix: c, freqs, powers must have equal length")
            if np.any(c < 0) or abs(c.sum() - 1.0) > 1e-12:
                raise ConfigError("periodic_cos_mix: c must be nonnegative and sum to 1")
            if min(freqs) < 1 or min(powers) < 1:
                raise ConfigError("periodic_cos_mix: freqs and powers must be positive integers")
            p["c"], p["freqs"], p["powers"] = tuple(c), freqs, powers
        if fam is Family.TABULATED:
            if self.table is None:
                raise ConfigError("tabulated kernel needs a table")
            nodes, values = (np.asarray(a, dtype=float) for a in self.table)
            if nodes.ndim != 1 or values.shape != (nodes.size, nodes.size):
                raise ConfigError("tabulated kernel: values must be an n x n matrix over n nodes")
            if nodes.size < 1 or np.any(np.diff(nodes) <= 0):
                raise ConfigError("tabulated kernel: nodes must be strictly increasing")
            values = 0.5 * (values + values.T)
            nodes.flags.writeable = False
            values.flags.writeable = False
            object.__setattr__(self, "table", (nodes, values))

    # -- constructors -------------------------------------------------

    @classmethod
    def exponential(cls, lam=1.0, scale=1.0):
        return cls(Family.EXPONENTIAL, {"lam": lam}, scale)

    @classmethod
    def gaussian(cls, lam=1.0, scale=1.0):
        return cls(Family.GAUSSIAN, {"lam": lam}, scale)

    @classmethod
    def triangular(cls, lam=1.0, scale=1.0):
        return cls(Family.TRIANGULAR, {"lam": lam}, scale)

    @classmethod
    def spherical(cls, R=1.0, scale=1.0):
        return cls(Family.SPHERICAL, {"R": R}, scale)

    @classmethod
    def power_exp(cls, lam=1.0, nu=1.0, scale=1.0):
        return cls(Family.POWER_EXP, {"lam": lam, "nu": nu}, scale)

    @classmethod
    def logarithmic(cls, beta=1.0, gamma=0.0, scale=1.0):
        return cls(Family.LOGARITHMIC, {"beta": beta, "gamma": gamma}, scale)

    @classmethod
    def power_singular(cls, alpha=0.5, beta=1.0, gamma=0.0, h=0.0, scale=1.0):
        return cls(Family.POWER_SINGULAR, {"alpha": alpha, "beta": beta, "gamma": gamma, "h": h}, scale)

    @classmethod
    def periodic_cos_mix(cls, c=(0.5, 0.5), freqs=(1, 1), powers=(1, 2), scale=1.0):
        return cls(Family.PERIODIC_COS_MIX, {"c": c, "freqs": freqs, "powers": powers}, scale)

    @classmethod
    def smoothed_log_kernel(cls, delta=0.1, beta=1.0, gamma=0.0, scale=1.0):
        return cls(Family.SMOOTHED_LOG, {"delta": delta, "beta": beta, "gamma": gamma}, scale)

    @classmethod
    def brownian_min(cls, scale=1.0):
        return cls(Family.BROWNIAN_MIN, {}, scale)

    @classmethod
    def tabulated(cls, nodes, values, scale=1.0):
        return cls(Family.TABULATED, {}, scale, (nodes, values))

    @classmethod
    def constant(cls, value=1.0, lo=-1.0, hi=1.0):
        if value == 0:
            raise ConfigError("constant kernel must be nonzero")
        return cls.tabulated([lo, hi], np.full((2, 2), float(value)))

    # -- properties ---------------------------------------------------

    @property
    def singular_on_diagonal(self) -> bool:
        if self.family is Family.LOGARITHMIC:
            return True
        if self.family is Family.POWER_SINGULAR:
            return self.params["h"] == 0 and self.params["alpha"] > 0
        return False

    @property
    def periodic(self) -> bool:
        return self.family is Family.PERIODIC_COS_MIX

    @property
    def period(self) -> float | None:
        return 1.0 if self.periodic else None

    @property
    def stationary(self) -> bool:
        return self.family not in (Family.BROWNIAN_MIN, Family.TABULATED)

    def with_scale(self, s: float) -> "CovarianceKernel":
        return CovarianceKernel(self.family, dict(self.params), self.scale * s, self.table)

    # -- evaluation ---------------------------------------------------

    def rho(self, t):
        """Scaled stationary profile K(u, u + t); ``inf`` at t = 0 for singular kernels."""
        if not self.stationary:
            raise ConfigError(f"{self.family.value} kernel is not stationary")
        t = np.abs(np.asarray(t, dtype=float))
        p = self.params
        fam = self.family
        with np.errstate(divide="ignore"):
            if fam is Family.EXPONENTIAL:
                out = np.exp(-p["lam"] * t)
            elif fam is Family.GAUSSIAN:
                out = np.exp(-p["lam"] * t**2)
            elif fam is Family.TRIANGULAR:
                out = np.maximum(0.0, 1.0 - p["lam"] * t)
            elif fam is Family.SPHERICAL:
                s = t / p["R"]
                out = np.where(s < 1.0, 1.0 - 1.5 * s + 0.5 * s**3, 0.0)
            elif fam is Family.POWER_EXP:
                out = np.exp(-p["lam"] * t ** p["nu"])
            elif fam is Family.LOGARITHMIC:
                out = p["gamma"] - p["beta"] * 2.0 * np.log(t)
            elif fam is Family.POWER_SINGULAR:
                out = p["gamma"] + p["beta"] / (p["h"] + t) ** p["alpha"]
            elif fam is Family.SMOOTHED_LOG:
                out = p["gamma"] + p["beta"] * np.asarray(smoothed_log(p["delta"], t))
            elif fam is Family.PERIODIC_COS_MIX:
                out = np.zeros_like(t)
                for c, k, pw in zip(p["c"], p["freqs"], p["powers"]):
                    out = out + c * np.cos(2.0 * np.pi * k * t) ** pw
        out = self.scale * out
        return out if out.ndim else float(out)

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.stationary:
            return self.rho(u - v)
        if self.family is Family.BROWNIAN_MIN:
            out = self.scale * np.minimum(u, v)
        else:
            out = self.scale * _bilinear(self.table[0], self.table[1], u, v)
        return out if np.ndim(out) else float(out)

    def breakpoints(self, x: float):
        """Points where v -> K(x, v) is not smooth (always includes x)."""
        p = self.params
        fam = self.family
        pts = [x]
        if fam is Family.TRIANGULAR:
            pts += [x - 1.0 / p["lam"], x + 1.0 / p["lam"]]
        elif fam is Family.SPHERICAL:
            pts += [x - p["R"], x + p["R"]]
        elif fam is Family.SMOOTHED_LOG:
            pts += [x - p["delta"], x + p["delta"]]
        elif fam is Family.TABULATED:
            pts += list(self.table[0])
        return pts

    # -- singular-kernel approximants ----------------------------------

    def smoothed(self, h: float) -> "CovarianceKernel":
        """Finite approximant with smoothing width ``h``; identity for regular kernels."""
        if not self.singular_on_diagonal:
            return self
        if not h > 0:
            raise ConfigError("smoothing width must be positive")
        p = self.params
        if self.family is Family.LOGARITHMIC:
            return CovarianceKernel.smoothed_log_kernel(h, p["beta"], p["gamma"], self.scale)
        return CovarianceKernel.power_singular(p["alpha"], p["beta"], p["gamma"], h, self.scale)

    def cell_mean(self, width: float) -> float:
        """Mean of K(u, v) over u, v independently uniform on a cell of this width."""
        if not self.singular_on_diagonal:
            return float(self.rho(0.0)) if self.stationary else math.nan
        p = self.params
        if self.family is Family.LOGARITHMIC:
            val = p["gamma"] + p["beta"] * (3.0 - 2.0 * math.log(width))
        else:
            a = p["alpha"]
            val = p["gamma"] + p["beta"] * 2.0 * width ** (-a) / ((1.0 - a) * (2.0 - a))
        return self.scale * val

    # -- serialization -------------------------------------------------

    def to_config(self) -> dict:
        cfg = {"family": self.family.value, "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}}
        if self.scale != 1.0:
            cfg["scale"] = self.scale
        if self.table is not None:
            cfg["table"] = {"nodes": self.table[0].tolist(), "values": self.table[1].tolist()}
        return cfg

    @classmethod
    def from_config(cls, cfg: dict, base_dir: Path | None = None) -> "CovarianceKernel":
        try:
            fam = Family(cfg["family"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad kernel family in {cfg!r}") from exc
        params = dict(cfg.get("params", {}))
        scale = float(cfg.get("scale", 1.0))
        if fam is Family.TABULATED:
            if "csv" in cfg:
                path = Path(cfg["csv"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                return load_tabulated_csv(path, scale)
            tab = cfg.get("table")
            if tab is None:
                raise ConfigError("tabulated kernel needs 'csv' or 'table'")
            return cls.tabulated(tab["nodes"], tab["values"], scale)
        return cls(fam, params, scale)

    def __repr__(self):
        if self.table is not None:
            return f"CovarianceKernel({self.family.value}, n={self.table[0].size})"
        return f"CovarianceKernel({self.family.value}, {self.params}, scale={self.scale})"


def _bilinear(nodes, values, u, v):
    u, v = np.broadcast_arrays(u, v)
    if nodes.size == 1:
        return np.full(u.shape, values[0, 0])
    lo, hi = nodes[0], nodes[-1]
    tol = 1e-12 * max(1.0, hi - lo)
    if np.any((u < lo - tol) | (u > hi + tol) | (v < lo - tol) | (v > hi + tol)):
        raise ValueError("tabulated kernel evaluated outside its node range")
    # the table is symmetric, so ordering the arguments makes the result exactly symmetric
    u, v = np.minimum(u, v), np.maximum(u, v)
    u = np.clip(u, lo, hi)
    v = np.clip(v, lo, hi)
    i = np.clip(np.searchsorted(nodes, u, side="right") - 1, 0, nodes.size - 2)
    j = np.clip(np.searchsorted(nodes, v, side="right") - 1, 0, nodes.size - 2)
    tu = (u - nodes[i]) / (nodes[i + 1] - nodes[i])
    tv = (v - nodes[j]) / (nodes[j + 1] - nodes[j])
    return ((1 - tu) * (1 - tv) * values[i, j] + tu * (1 - tv) * values[i + 1, j]
            + (1 - tu) * tv * values[i, j + 1] + tu * tv * values[i + 1, j + 1])


def load_tabulated_csv(path, scale: float = 1.0) -> CovarianceKernel:
    """Read a ``u,v,K`` CSV; missing (v, u) entries are filled by symmetry."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append((float(rec["u"]), float(rec["v"]), float(rec["K"])))
    if not rows:
        raise ConfigError(f"{path}: empty kernel table")
    nodes = np.unique([r[0] for r in rows] + [r[1] for r in rows])
    idx = {x: i for i, x in enumerate(nodes)}
    vals = np.full((nodes.size, nodes.size), np.nan)
    for u, v, k in rows:
        vals[idx[u], idx[v]] = k
    sym = np.where(np.isnan(vals), vals.T, vals)
    sym = np.where(np.isnan(vals.T), sym, 0.5 * (sym + vals.T))
    if np.isnan(sym).any():
        raise ConfigError(f"{path}: kernel table does not cover every (u, v) node pair")
    return CovarianceKernel.tabulated(nodes, sym, scale)


def eval(kernel: CovarianceKernel, u, v):
    return kernel(u, v)


@dataclass(frozen=True)
class PSDReport:
    min_eigenvalue: float
    trace: float
    threshold: float
    passed: bool
    smoothing: float | None = None


def psd_diagnostic(kernel: CovarianceKernel, grid, smoothing: float | str | None = None) -> PSDReport:
    """Smallest eigenvalue of the Gram matrix on ``grid``.

    Singular kernels need ``smoothing`` (a width, or ``"auto"`` for half
    the minimal grid spacing).
    """
    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size < 2:
        raise ConfigError("psd_diagnostic needs at least two distinct grid points")
    h = None
    k = kernel
    if kernel.singular_on_diagonal:
        if smoothing is None:
            raise SmoothingRequiredError(f"{kernel.family.value} kernel is singular; smoothing required")
        h = 0.5 * np.diff(grid).min() if smoothing == "auto" else float(smoothing)
        k = kernel.smoothed(h)
    G = k(grid[:, None], grid[None, :])
    eig = np.linalg.eigvalsh(0.5 * (G + G.T))
    tr = float(np.trace(G))
    thr = -1e-8 * abs(tr)
    return PSDReport(float(eig[0]), tr, thr, bool(eig[0] >= thr), h)
