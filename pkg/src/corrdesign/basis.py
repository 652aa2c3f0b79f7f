"""Regression function vectors f(x) = (f_1(x), ..., f_m(x))."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .errors import ConfigError, DomainError, IncompatibleBasisError


class BasisFamily(str, enum.Enum):
    MONOMIAL = "monomial"
    CHEBYSHEV = "chebyshev"
    GEGENBAUER = "gegenbauer"
    COSINE = "cosine"
    TABULATED = "tabulated"


def gegenbauer(n_max: int, lam: float, x):
    """Rows C_0 .. C_{n_max} of the classical Gegenbauer polynomials C_n^(lam)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * lam * x
    for n in range(2, n_max + 1):
        out[n] = (2.0 * x * (n + lam - 1.0) * out[n - 1] - (n + 2.0 * lam - 2.0) * out[n - 2]) / n
    return out


def _gegenbauer_coeffs(n_max: int, lam: float) -> np.ndarray:
    # power-basis coefficients via the same recurrence
    C = np.zeros((n_max + 1, n_max + 1))
    C[0, 0] = 1.0
    if n_max >= 1:
        C[1, 1] = 2.0 * lam
    for n in range(2, n_max + 1):
        C[n, 1:] = 2.0 * (n + lam - 1.0) * C[n - 1, :-1]
        C[n] -= (n + 2.0 * lam - 2.0) * C[n - 2]
        C[n] /= n
    return C


@dataclass(frozen=True, eq=False)
class RegressionBasis:
    family: BasisFamily
    m: int
    domain: tuple = (-1.0, 1.0)
    alpha: float | None = None
    indices: tuple | None = None
    powers: tuple | None = None
    table: tuple | None = None

    def __post_init__(self):
        fam = BasisFamily(self.family)
        object.__setattr__(self, "family", fam)
        a, b = (float(v) for v in self.domain)
        if not a < b:
            raise ConfigError("basis domain must be a nondegenerate interval")
        object.__setattr__(self, "domain", (a, b))
        if self.m < 1:
            raise ConfigError("basis needs m >= 1")
        if fam is BasisFamily.MONOMIAL:
            powers = tuple(range(self.m)) if self.powers is None else tuple(int(p) for p in self.powers)
            if len(powers) != self.m or len(set(powers)) != self.m or min(powers) < 0:
                raise ConfigError("monomial powers must be m distinct nonnegative integers")
            object.__setattr__(self, "powers", powers)
        if fam is BasisFamily.GEGENBAUER and not (self.alpha is not None and self.alpha > 0):
            raise ConfigError("gegenbauer basis needs a parameter alpha > 0")
        if fam is BasisFamily.COSINE:
            idx = tuple(int(i) for i in self.indices) if self.indices else tuple(range(1, self.m + 1))
            if len(idx) != self.m or min(idx) < 1 or any(j <= i for i, j in zip(idx, idx[1:])):
                raise ConfigError("cosine indices must be m strictly increasing integers >= 1")
            object.__setattr__(self, "indices", idx)
        if fam is BasisFamily.TABULATED:
            if self.table is None:
                raise ConfigError("tabulated basis needs (nodes, values)")
            nodes, values = (np.asarray(t, dtype=float) for t in self.table)
            if values.shape != (nodes.size, self.m) or np.any(np.diff(nodes) <= 0):
                raise ConfigError("tabulated basis: values must be n x m over increasing nodes")
            object.__setattr__(self, "table", (nodes, values))
            object.__setattr__(self, "domain", (float(nodes[0]), float(nodes[-1])))

    @classmethod
    def monomial(cls, m: int, domain=(-1.0, 1.0), powers=None):
        return cls(BasisFamily.MONOMIAL, m if powers is None else len(powers), domain, powers=powers)

    @classmethod
    def chebyshev(cls, m: int, domain=(-1.0, 1.0)):
        return cls(BasisFamily.CHEBYSHEV, m, domain)

    @classmethod
    def gegenbauer(cls, m: int, alpha: float, domain=(-1.0, 1.0)):
        return cls(BasisFamily.GEGENBAUER, m, domain, alpha=alpha)

    @classmethod
    def cosine(cls, indices, domain=(0.0, 1.0)):
        indices = tuple(indices)
        return cls(BasisFamily.COSINE, len(indices), domain, indices=indices)

    @classmethod
    def tabulated(cls, nodes, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        return cls(BasisFamily.TABULATED, values.shape[1], table=(nodes, values))

    def _check_domain(self, x):
        a, b = self.domain
        tol = 1e-12 * max(1.0, b - a)
        if np.any((x < a - tol) | (x > b + tol)) or np.any(np.isnan(x)):
            raise DomainError(f"point(s) outside basis domain [{a}, {b}]")

    def __call__(self, x):
        """f(x); shape (m,) for scalar x, (n, m) for an array of n points."""
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        xs = np.atleast_1d(x)
        fam = self.family
        if fam is BasisFamily.MONOMIAL:
            F = xs[:, None] ** np.asarray(self.powers)[None, :]
        elif fam is BasisFamily.CHEBYSHEV:
            F = npcheb.chebvander(xs, self.m - 1)
        elif fam is BasisFamily.GEGENBAUER:
            F = gegenbauer(self.m - 1, self.alpha, xs).T
        elif fam is BasisFamily.COSINE:
            j = np.asarray(self.indices)
            F = np.sqrt(2.0) * np.cos(2.0 * np.pi * (j[None, :] - 1) * xs[:, None])
            F[:, j == 1] = 1.0
        else:
            nodes, values = self.table
            F = np.column_stack([np.interp(xs, nodes, values[:, k]) for k in range(self.m)])
        return F[0] if x.ndim == 0 else F

    def power_coefficients(self) -> np.ndarray:
        """Rows hold power-basis coefficients of f_1..f_m (polynomial families only)."""
        fam = self.family
        if fam is BasisFamily.MONOMIAL:
            deg = max(self.powers)
            P = np.zeros((self.m, deg + 1))
            P[np.arange(self.m), list(self.powers)] = 1.0
            return P
        if fam is BasisFamily.CHEBYSHEV:
            P = np.zeros((self.m, self.m))
            for n in range(self.m):
                c = npcheb.cheb2poly(np.eye(self.m)[n])
                P[n, : c.size] = c
            return P
        if fam is BasisFamily.GEGENBAUER:
            return _gegenbauer_coeffs(self.m - 1, self.alpha)
        raise IncompatibleBasisError(f"{fam.value} basis is not a polynomial family")

    def admissible(self, x) -> np.ndarray:
        """Mask of points with f(x) != 0."""
        F = np.atleast_2d(self(np.atleast_1d(x)))
        return np.any(F != 0.0, axis=1)

    def to_config(self) -> dict:
        cfg = {"family": self.family.value, "m": self.m, "domain": list(self.domain)}
        if self.family is BasisFamily.GEGENBAUER:
            cfg["alpha"] = self.alpha
        if self.family is BasisFamily.COSINE:
            cfg["indices"] = list(self.indices)
        if self.family is BasisFamily.MONOMIAL and self.powers != tuple(range(self.m)):
            cfg["powers"] = list(self.powers)
        if self.family is BasisFamily.TABULATED:
            cfg["table"] = {"nodes": self.table[0].tolist(), "values": self.table[1].tolist()}
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "RegressionBasis":
        try:
            fam = BasisFamily(cfg["family"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad basis family in {cfg!r}") from exc
        if fam is BasisFamily.COSINE:
            return cls.cosine(cfg["indices"], tuple(cfg.get("domain", (0.0, 1.0))))
        if fam is BasisFamily.TABULATED:
            return cls.tabulated(cfg["table"]["nodes"], cfg["table"]["values"])
        domain = tuple(cfg.get("domain", (-1.0, 1.0)))
        if fam is BasisFamily.MONOMIAL:
            if "powers" in cfg:
                return cls.monomial(len(cfg["powers"]), domain, powers=cfg["powers"])
            return cls.monomial(int(cfg["m"]), domain)
        if fam is BasisFamily.CHEBYSHEV:
            return cls.chebyshev(int(cfg["m"]), domain)
        return cls.gegenbauer(int(cfg["m"]), float(cfg["alpha"]), domain)

    def __repr__(self):
        extra = ""
        if self.family is BasisFamily.GEGENBAUER:
            extra = f", alpha={self.alpha}"
        elif self.family is BasisFamily.COSINE:
            extra = f", indices={self.indices}"
        elif self.family is BasisFamily.MONOMIAL and self.powers != tuple(range(self.m)):
            extra = f", powers={self.powers}"
        return f"RegressionBasis({self.family.value}, m={self.m}{extra})"


def eval_basis(basis: RegressionBasis, x):
    return basis(x)


def change_of_basis(basis: RegressionBasis, target: RegressionBasis) -> np.ndarray:
    """Nonsingular L with basis(x) = L @ target(x)."""
    if basis.m != target.m:
        raise IncompatibleBasisError("bases have different dimensions")
    P = basis.power_coefficients()
    Q = target.power_coefficients()
    deg = max(P.shape[1], Q.shape[1])
    P = np.pad(P, ((0, 0), (0, deg - P.shape[1])))
    Q = np.pad(Q, ((0, 0), (0, deg - Q.shape[1])))
    # Solve L Q = P; both must span the same polynomial space.
    L, *_ = np.linalg.lstsq(Q.T, P.T, rcond=None)
    L = L.T
    if not np.allclose(L @ Q, P, atol=1e-10, rtol=0):
        raise IncompatibleBasisError(f"{basis!r} and {target!r} span different spaces")
    xs = np.linspace(*basis.domain, basis.m + 1)
    resid = np.abs(basis(xs) - target(xs) @ L.T).max()
    scale = max(1.0, np.abs(basis(xs)).max())
    if resid > 1e-12 * scale * max(1.0, np.abs(L).max()):
        raise IncompatibleBasisError(f"change-of-basis residual {resid:.2e} too large")
    return L
