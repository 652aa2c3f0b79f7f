"""Sensitivity functions and optimality checks for OLS designs.

With M, B, D = M^-1 B M^-1 and Lambda = B M^-1 of a design xi, a criterion
with derivative matrix C = dPhi/dD, and k(x) = int K(x, u) f(u) xi(du):

    phi(x) = f^T D C M^-1 f
    b(x)   = f^T M^-1 C M^-1 k(x)
    g(x)   = k(x) - Lambda f(x)
    r(x)   = f^T M^-1 C M^-1 g(x) = b(x) - phi(x)
    psi(x) = phi(x) / b(x)

An optimal design satisfies phi <= b everywhere with equality on its
support; g == 0 certifies optimality in the Loewner order.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .designs import Design, DensityDesign
from .errors import ConfigError
from .moments import MomentSet, cov_matrix

ALG_TOL = 1e-6
GRID_TOL = 1e-3
WEIGHT_FLOOR = 1e-8
DEFAULT_GRID_N = 201

CERTIFIED = "CERTIFIED"
NECESSARY_CONSISTENT = "NECESSARY-CONSISTENT"
REFUTED = "REFUTED"


@dataclass(frozen=True)
class Criterion:
    """D-criterion (Phi = ln det D) or c-criterion (Phi = c^T D c)."""

    kind: str = "D"
    c: tuple | None = None

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in ("D", "C"):
            raise ConfigError(f"unknown criterion kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "C":
            if self.c is None:
                raise ConfigError("c-criterion needs a vector c")
            c = tuple(float(v) for v in np.ravel(self.c))
            if not any(c):
                raise ConfigError("c must be nonzero")
            object.__setattr__(self, "c", c)

    @classmethod
    def D(cls):
        return cls("D")

    @classmethod
    def C(cls, c):
        return cls("C", tuple(np.ravel(c)))

    def _cvec(self, m):
        c = np.asarray(self.c)
        if c.size != m:
            raise ConfigError(f"c has length {c.size}, model has m = {m}")
        return c

    def derivative(self, D: np.ndarray) -> np.ndarray:
        if self.kind == "D":
            return np.linalg.inv(D)
        c = self._cvec(D.shape[0])
        return np.outer(c, c)

    def value(self, D: np.ndarray) -> float:
        if self.kind == "D":
            sign, logdet = np.linalg.slogdet(D)
            return logdet if sign > 0 else np.inf
        c = self._cvec(D.shape[0])
        return float(c @ D @ c)

    def to_config(self) -> dict:
        return {"kind": self.kind} if self.kind == "D" else {"kind": "c", "c": list(self.c)}

    @classmethod
    def from_config(cls, cfg) -> "Criterion":
        if isinstance(cfg, str):
            cfg = {"kind": cfg}
        kind = str(cfg.get("kind", "D"))
        return cls(kind, cfg.get("c"))


class Sensitivity(NamedTuple):
    x: np.ndarray
    phi: np.ndarray
    b: np.ndarray
    r: np.ndarray
    g: np.ndarray
    k: np.ndarray
    F: np.ndarray

    @property
    def psi(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.b != 0, self.phi / self.b, np.nan)


def _moments(design, basis, kernel, policy, quad_n) -> MomentSet:
    if isinstance(design, MomentSet):
        return design
    return cov_matrix(design, basis, kernel, policy=policy, quad_n=quad_n)


def sensitivities(ms: MomentSet, criterion: Criterion, x) -> Sensitivity:
    """All sensitivity functions of the moment set on the points x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    F = ms.f(x)
    k = ms.kernel_column(x)
    C = criterion.derivative(ms.D)
    A = ms.D @ C @ ms.M_inv
    Bq = ms.M_inv @ C @ ms.M_inv
    phi = np.einsum("ij,jk,ik->i", F, A, F)
    b = np.einsum("ij,jk,ik->i", F, Bq, k)
    g = k - F @ ms.Lambda.T
    r = np.einsum("ij,jk,ik->i", F, Bq, g)
    return Sensitivity(x, phi, b, r, g, k, F)


def phi_fn(x, design, basis, kernel, criterion=Criterion("D"), policy="smooth", quad_n=None):
    ms = _moments(design, basis, kernel, policy, quad_n)
    out = sensitivities(ms, criterion, x).phi
    return out[0] if np.ndim(x) == 0 else out


def b_fn(x, design, basis, kernel, criterion=Criterion("D"), policy="smooth", quad_n=None):
    ms = _moments(design, basis, kernel, policy, quad_n)
    out = sensitivities(ms, criterion, x).b
    return out[0] if np.ndim(x) == 0 else out


def b_fn_dcrit(x, design, basis, kernel, policy="smooth", quad_n=None):
    """D-criterion form b(x) = f^T B^-1 k(x)."""
    ms = _moments(design, basis, kernel, policy, quad_n)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    F, k = ms.f(xs), ms.kernel_column(xs)
    out = np.einsum("ij,ij->i", F, np.linalg.solve(ms.B, k.T).T)
    return out[0] if np.ndim(x) == 0 else out


def g_fn(x, design, basis, kernel, policy="smooth", quad_n=None):
    ms = _moments(design, basis, kernel, policy, quad_n)
    out = sensitivities(ms, Criterion("D"), x).g
    return out[0] if np.ndim(x) == 0 else out


def r_fn(x, design, basis, kernel, criterion=Criterion("D"), policy="smooth", quad_n=None):
    ms = _moments(design, basis, kernel, policy, quad_n)
    out = sensitivities(ms, criterion, x).r
    return out[0] if np.ndim(x) == 0 else out


def psi_fn(x, design, basis, kernel, criterion=Criterion("D"), policy="smooth", quad_n=None):
    ms = _moments(design, basis, kernel, policy, quad_n)
    out = sensitivities(ms, criterion, x).psi
    return out[0] if np.ndim(x) == 0 else out


def orthogonality_residual(ms: MomentSet) -> float:
    """Relative size of int g f^T dxi, which vanishes identically."""
    itg = ms._itg
    g = ms.kernel_column(itg.nodes) - itg.F @ ms.Lambda.T
    R = g.T @ itg.wF
    return float(np.abs(R).max() / max(np.abs(ms.B).max(), 1e-300))


def _support_of(ms: MomentSet, weight_floor):
    d = ms.design
    if isinstance(d, Design):
        return d.support[d.weights > weight_floor]
    return np.empty(0)


def default_grid(ms_or_basis, n=DEFAULT_GRID_N):
    basis = getattr(ms_or_basis, "basis", ms_or_basis)
    return np.linspace(*basis.domain, n)


class IdentityResidual(NamedTuple):
    phi_vs_b: float
    phi_vs_trace: float
    value: float


def identity_check(design, basis, kernel, criterion=Criterion("D"), policy="smooth", quad_n=None) -> IdentityResidual:
    """|int phi - int b| and |int phi - tr(D C)| over the design, plus tr(D C)."""
    ms = _moments(design, basis, kernel, policy, quad_n)
    itg = ms._itg
    s = sensitivities(ms, criterion, itg.nodes)
    w = itg.weights
    iphi, ib = float(w @ s.phi), float(w @ s.b)
    tr = float(np.trace(ms.D @ criterion.derivative(ms.D)))
    return IdentityResidual(abs(iphi - ib), abs(iphi - tr), tr)


def directional_derivative(design_xi, design_nu, basis, kernel, criterion=Criterion("D"),
                           policy="smooth", quad_n=None) -> float:
    """Derivative of Phi(D((1 - a) xi + a nu)) at a = 0: 2 [int b dnu - int phi dnu]."""
    ms = _moments(design_xi, basis, kernel, policy, quad_n)
    if isinstance(design_nu, DensityDesign):
        y, v = design_nu.quadrature_rule(quad_n or 200)
    else:
        y, v = design_nu.support, design_nu.weights
    s = sensitivities(ms, criterion, y)
    return 2.0 * float(v @ (s.b - s.phi))


@dataclass
class OptimalityReport:
    check: str
    grid: np.ndarray
    phi: np.ndarray
    b: np.ndarray
    psi: np.ndarray
    r: np.ndarray
    g: np.ndarray
    d: np.ndarray | None = None
    max_violation: float = 0.0
    identity_residual: tuple = (0.0, 0.0)
    verdict: dict = field(default_factory=dict)
    status: str | None = None
    gamma: np.ndarray | None = None
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdict.values())

    def to_json(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "check": self.check,
            "status": self.status,
            "passed": self.passed,
            "verdict": self.verdict,
            "max_violation": self.max_violation,
            "identity_residual": list(self.identity_residual),
            "grid": arr(self.grid),
            "phi": arr(self.phi),
            "b": arr(self.b),
            "psi": arr(self.psi),
            "r": arr(self.r),
            "d": arr(self.d),
            "g": arr(self.g),
            "gamma": arr(self.gamma),
            "config": self.config,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["x", "phi", "b", "psi", "r"])
        for row in zip(self.grid, self.phi, self.b, self.psi, self.r):
            wr.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _sweep(ms, criterion, grid, weight_floor):
    grid = default_grid(ms) if grid is None else np.asarray(grid, dtype=float)
    atoms = _support_of(ms, weight_floor)
    pts = np.union1d(grid, atoms)
    s = sensitivities(ms, criterion, pts)
    if isinstance(ms.design, Design):
        on = np.isin(pts, atoms)
    else:
        # a density charges every interior point of its interval
        p = ms.design.density(pts)
        on = np.isfinite(p) & (p > 0) | ~np.isfinite(p)
    return s, on


def necessary_condition_check(design, basis, kernel, criterion=Criterion("D"), grid=None, tol=GRID_TOL,
                              weight_floor=WEIGHT_FLOOR, policy="smooth", quad_n=None) -> OptimalityReport:
    """phi <= b on the grid, phi == b on the support (both relative to max |b|)."""
    ms = _moments(design, basis, kernel, policy, quad_n)
    s, on = _sweep(ms, criterion, grid, weight_floor)
    scale = float(np.abs(s.b).max())
    diff = s.phi - s.b
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_off = np.where(~on & (s.b != 0), diff / np.abs(s.b), 0.0)
    ineq = float(diff.max()) if diff.size else 0.0
    eq = float(np.abs(diff[on]).max()) if on.any() else 0.0
    max_violation = max(float(rel_off.max()) if rel_off.size else 0.0, eq)
    ident = identity_check(ms, basis, kernel, criterion)
    verdict = {
        "inequality": {"pass": bool(ineq <= tol * scale), "value": ineq, "tol": tol * scale},
        "equality_on_support": {"pass": bool(eq <= tol * scale), "value": eq, "tol": tol * scale},
    }
    return OptimalityReport(
        "necessary", s.x, s.phi, s.b, s.psi, s.r, s.g,
        d=s.phi if criterion.kind == "D" else None,
        max_violation=max_violation, identity_residual=(ident.phi_vs_b, ident.phi_vs_trace),
        verdict=verdict, status="PASS" if all(v["pass"] for v in verdict.values()) else "FAIL",
    )


def c_optimality_check(design, basis, kernel, c, grid=None, tol=GRID_TOL, weight_floor=WEIGHT_FLOOR,
                       policy="smooth", quad_n=None) -> OptimalityReport:
    """r_c >= 0 on the grid and r_c == 0 on the support."""
    crit = Criterion.C(c)
    ms = _moments(design, basis, kernel, policy, quad_n)
    s, on = _sweep(ms, crit, grid, weight_floor)
    scale = max(float(np.abs(s.b).max()), 1e-300)
    low = float(-s.r.min())
    eq = float(np.abs(s.r[on]).max()) if on.any() else 0.0
    ident = identity_check(ms, basis, kernel, crit)
    verdict = {
        "r_nonnegative": {"pass": bool(low <= tol * scale), "value": -low, "tol": tol * scale},
        "r_zero_on_support": {"pass": bool(eq <= tol * scale), "value": eq, "tol": tol * scale},
    }
    return OptimalityReport(
        "c-optimality", s.x, s.phi, s.b, s.psi, s.r, s.g,
        max_violation=max(low, eq) / scale, identity_residual=(ident.phi_vs_b, ident.phi_vs_trace),
        verdict=verdict, status="PASS" if all(v["pass"] for v in verdict.values()) else "FAIL",
    )


def _roundoff_floor(ms, F) -> float:
    # k can vanish identically when the kernel has no mass on the basis; g is
    # then pure round-off and must be judged against the size of K itself
    x = ms._itg.nodes
    with np.errstate(all="ignore"):
        diag = np.abs(ms.effective_kernel(x, x))
    kmax = float(diag[np.isfinite(diag)].max(initial=0.0))
    return max(1e-10 * kmax * float(np.abs(F).max()), 1e-300)


def universal_optimality_check(design, basis, kernel, grid=None, tol=GRID_TOL, weight_floor=WEIGHT_FLOOR,
                               policy="smooth", quad_n=None) -> OptimalityReport:
    """Three-valued verdict on Loewner optimality from the g-function.

    CERTIFIED             sup |g| <= tol * max |k|  (g == 0 is sufficient)
    NECESSARY-CONSISTENT  g = gamma f with gamma >= 0 and gamma = 0 on the support
    REFUTED               otherwise (the proportional form is necessary)
    """
    ms = _moments(design, basis, kernel, policy, quad_n)
    s, on = _sweep(ms, Criterion("D"), grid, weight_floor)
    floor = _roundoff_floor(ms, s.F)
    scale = max(float(np.abs(s.k).max()), floor)
    thr = max(tol * scale, floor)
    gmax = float(np.abs(s.g).max())
    fn = np.linalg.norm(s.F, axis=1)
    gn = np.linalg.norm(s.g, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(fn > 0, np.einsum("ij,ij->i", s.g, s.F) / fn**2, 0.0)
        resid = np.linalg.norm(s.g - gamma[:, None] * s.F, axis=1)
        sine = np.where(gn > thr, resid / gn, 0.0)
    sine = np.where((fn == 0) & (gn > thr), 1.0, sine)
    proportional = float(sine.max())
    neg = float(-(gamma * fn).min())
    on_support = float((np.abs(gamma) * fn)[on].max()) if on.any() else 0.0
    if gmax <= thr:
        status = CERTIFIED
    elif proportional <= tol and neg <= thr and on_support <= thr:
        status = NECESSARY_CONSISTENT
    else:
        status = REFUTED
    verdict = {
        "g_zero": {"pass": bool(gmax <= thr), "value": gmax, "tol": thr},
        "proportional": {"pass": bool(proportional <= tol), "value": proportional, "tol": tol},
        "gamma_nonnegative": {"pass": bool(neg <= thr), "value": -neg, "tol": thr},
        "gamma_zero_on_support": {"pass": bool(on_support <= thr), "value": on_support, "tol": thr},
    }
    if status != REFUTED:
        # only the conditions that decided the verdict are binding
        verdict = {"g_zero": verdict["g_zero"]} if status == CERTIFIED else {
            k: v for k, v in verdict.items() if k != "g_zero"}
    ident = identity_check(ms, basis, kernel, Criterion("D"))
    return OptimalityReport(
        "universal", s.x, s.phi, s.b, s.psi, s.r, s.g,
        max_violation=gmax / scale, identity_residual=(ident.phi_vs_b, ident.phi_vs_trace),
        verdict=verdict, status=status, gamma=gamma,
    )


def separating_c(a, b) -> np.ndarray:
    """c = a/|a| - b/|b|; for independent a, b this gives c^T a b^T c < 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a / np.linalg.norm(a) - b / np.linalg.norm(b)
