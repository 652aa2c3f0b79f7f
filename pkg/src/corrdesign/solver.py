"""Multiplicative weight-update algorithm on a fixed grid.

    w_i <- w_i (psi_i - beta) / sum_j w_j (psi_j - beta),   psi = phi / b

A design is a fixed point exactly when psi = 1 on its support, which is
the equality clause of the necessary condition.  Weights of points with
psi > 1 grow relative to the rest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .designs import Design, DensityDesign, grid_design, named_design
from .errors import ConfigError, NearSingularError, StepRejectedError
from .moments import cov_matrix, integrator, resolve_kernel, sym_inverse
from .optimality import Criterion, OptimalityReport, necessary_condition_check, sensitivities

log = logging.getLogger(__name__)

MAX_RETRIES = 30


@dataclass(frozen=True)
class SolverConfig:
    grid_n: int = 201
    beta_rule: str = "fixed"         # "fixed" or "adaptive"
    beta: float = 0.0                # used by the fixed rule
    margin: float = 0.1              # adaptive rule and step-rejection target
    max_iter: int = 5000
    conv_tol: float = 1e-7
    weight_floor: float = 1e-10
    check_tol: float = 1e-3

    def __post_init__(self):
        if self.beta_rule not in ("fixed", "adaptive"):
            raise ConfigError(f"beta_rule must be 'fixed' or 'adaptive', got {self.beta_rule!r}")
        if self.grid_n < 2 or self.max_iter < 1:
            raise ConfigError("grid_n >= 2 and max_iter >= 1 required")
        if not self.margin > 0 or not self.conv_tol > 0 or self.weight_floor < 0:
            raise ConfigError("margin and conv_tol must be positive, weight_floor nonnegative")

    @classmethod
    def from_config(cls, cfg: dict | None) -> "SolverConfig":
        cfg = dict(cfg or {})
        beta = cfg.pop("beta", None)
        if isinstance(beta, str):
            if beta not in ("adaptive", "fixed"):
                raise ConfigError(f"beta must be a number or 'adaptive', got {beta!r}")
            cfg["beta_rule"] = beta
        elif beta is not None:
            cfg["beta_rule"], cfg["beta"] = "fixed", float(beta)
        try:
            return cls(**cfg)
        except TypeError as exc:
            raise ConfigError(f"bad solver config: {exc}") from exc

    def to_config(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SolveResult:
    design: Design
    report: OptimalityReport
    trace: list = field(repr=False)
    converged: bool = False
    iterations: int = 0
    grid_design: Design | None = field(default=None, repr=False)

    @property
    def status(self) -> str:
        return "CONVERGED" if self.converged else "NOT-CONVERGED"

    def trace_csv(self) -> str:
        lines = ["iter,criterion,max_psi_dev"]
        lines += [f"{i},{float(c)!r},{float(d)!r}" for i, c, d in self.trace]
        return "\n".join(lines) + "\n"


class _GridProblem:
    """Sensitivities of all grid points for a weight vector, with the Gram matrix cached."""

    def __init__(self, grid, basis, kernel, criterion, policy):
        self.grid = np.asarray(grid, dtype=float)
        self.basis = basis
        self.criterion = criterion
        itg = integrator(Design(self.grid), basis, kernel, policy)
        self.kernel = itg.kernel
        self.F = itg.F
        self.G = itg.gram(self.grid)

    def evaluate(self, w):
        wF = w[:, None] * self.F
        M_inv, _ = sym_inverse(self.F.T @ wF, "information matrix M")
        k = self.G @ wF
        B = k.T @ wF
        B = 0.5 * (B + B.T)
        D = M_inv @ B @ M_inv
        D = 0.5 * (D + D.T)
        C = self.criterion.derivative(D)
        phi = np.einsum("ij,jk,ik->i", self.F, D @ C @ M_inv, self.F)
        b = np.einsum("ij,jk,ik->i", self.F, M_inv @ C @ M_inv, k)
        return phi, b, D


def _psi(phi, b):
    """phi / b, with a sign-safe surrogate 1 + (phi - b) / max|b| where b <= 0.

    For the D-criterion b > 0 and this is the plain ratio; for c-criteria b
    may change sign, and the surrogate keeps psi > 1 exactly where phi > b.
    """
    scale = float(np.abs(b).max())
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(b > 0, phi / b, 1.0 + (phi - b) / scale)


def _reweight(w, psi, beta, margin):
    """One update with step rejection; returns new weights and the beta used."""
    on = w > 0
    psi_on = psi[on]
    min_psi = float(psi_on.min())
    target = min_psi - margin
    for _ in range(MAX_RETRIES + 1):
        num = psi_on - beta
        if np.all(num > 0):
            new = np.zeros_like(w)
            new[on] = w[on] * num
            return new / new.sum(), beta
        # move beta halfway towards a value safely below min psi
        beta = 0.5 * (beta + target)
    raise StepRejectedError("nonpositive numerator in the multiplicative update", min_psi)


def multiplicative_step(design: Design, basis, kernel, criterion=Criterion("D"), beta: float = 0.0,
                        policy: str = "smooth") -> Design:
    """One update of the weights at ``beta``; raises if a numerator would be nonpositive."""
    ms = cov_matrix(design, basis, kernel, policy=policy)
    s = sensitivities(ms, criterion, design.support)
    psi = _psi(s.phi, s.b)
    w = np.asarray(design.weights)
    on = w > 0
    num = psi - beta
    bad = on & ~(num > 0)
    if bad.any():
        raise StepRejectedError("nonpositive numerator psi - beta at a support point", float(psi[bad][0]))
    new = np.where(on, w * num, 0.0)
    return Design(design.support, new / new.sum())


def _initial_weights(grid, initial):
    if initial is None or (isinstance(initial, str) and initial == "uniform"):
        return np.full(grid.size, 1.0 / grid.size)
    if isinstance(initial, str):
        initial = named_design(initial)
    if isinstance(initial, DensityDesign):
        return np.asarray(grid_design(initial, grid).weights)
    raise ConfigError(f"unsupported initial design {initial!r}")


def solve(basis, kernel, criterion=Criterion("D"), config: SolverConfig | None = None, initial=None,
          policy: str = "smooth", grid=None) -> SolveResult:
    """Run the multiplicative algorithm to (approximate) convergence.

    ``initial`` may be None / "uniform" (uniform grid weights), a named or
    density design (discretized onto the grid), or a :class:`Design`, whose
    support then serves as the grid.
    """
    cfg = config or SolverConfig()
    if isinstance(initial, Design):
        grid = np.asarray(initial.support)
        w = np.asarray(initial.weights, dtype=float).copy()
    else:
        grid = np.linspace(*basis.domain, cfg.grid_n) if grid is None else np.unique(np.asarray(grid, float))
        w = _initial_weights(grid, initial)
    if grid.size < 2 * basis.m + 1:
        raise ConfigError(f"grid of {grid.size} points is too small for m = {basis.m} (need >= {2 * basis.m + 1})")
    prob = _GridProblem(grid, basis, kernel, criterion, policy)
    try:
        phi, b, D = prob.evaluate(w)
    except NearSingularError as exc:
        raise NearSingularError(
            "moment matrices are singular at the initial design; try a different initial measure "
            "(e.g. uniform weights on the grid)", exc.condition_number) from exc

    trace = []
    best = (np.inf, w)
    converged = False
    prev = np.inf
    increases = 0
    it = 0
    for it in range(1, cfg.max_iter + 1):
        psi = _psi(phi, b)
        on = w > cfg.weight_floor
        dev = float(np.abs(psi[on] - 1.0).max())
        over = float(psi.max() - 1.0)
        val = criterion.value(D)
        trace.append((it - 1, val, max(dev, over)))
        if val < best[0]:
            best = (val, w)
        if val > prev + 1e-8 * max(1.0, abs(prev)):
            increases += 1
            log.debug("criterion increased at iteration %d: %.12g -> %.12g", it - 1, prev, val)
        prev = val
        if dev <= cfg.conv_tol and over <= cfg.conv_tol:
            converged = True
            best = (val, w)
            break
        beta = cfg.beta if cfg.beta_rule == "fixed" else float(psi[w > 0].min()) - cfg.margin
        w, _ = _reweight(w, psi, beta, cfg.margin)
        phi, b, D = prob.evaluate(w)
    else:
        val = criterion.value(D)
        if val < best[0]:
            best = (val, w)

    if increases:
        log.warning("criterion increased in %d of %d iterations; returning the best iterate", increases, it)
    w_out = best[1]
    on_grid = Design(grid, w_out)
    final = on_grid.pruned(cfg.weight_floor)
    report = necessary_condition_check(final, basis, kernel, criterion, grid=grid, tol=cfg.check_tol,
                                       weight_floor=max(cfg.weight_floor, 1e-8), policy=policy)
    report.config = {"solver": cfg.to_config(), "policy": policy, "converged": converged, "iterations": it}
    return SolveResult(final, report, trace, converged, it, on_grid)


def efficiency(design, reference_opt, basis, kernel, policy: str = "smooth", quad_n=None) -> float:
    """D-efficiency (det D(ref) / det D(design))^(1/m).

    For singular kernels under the smooth policy both atomic designs use the
    same smoothed kernel, from the union of their supports.
    """
    if kernel.singular_on_diagonal and policy == "smooth":
        atomic = [d.support for d in (design, reference_opt) if isinstance(d, Design)]
        if atomic:
            kernel = resolve_kernel(kernel, policy, *atomic)
    D1 = cov_matrix(design, basis, kernel, policy=policy, quad_n=quad_n).D
    D0 = cov_matrix(reference_opt, basis, kernel, policy=policy, quad_n=quad_n).D
    s1, l1 = np.linalg.slogdet(D1)
    s0, l0 = np.linalg.slogdet(D0)
    if s1 <= 0 or s0 <= 0:
        raise NearSingularError("covariance matrix D is singular", np.inf)
    return float(np.exp((l0 - l1) / basis.m))
