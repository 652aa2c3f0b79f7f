"""Independent checks: Monte Carlo LSE covariance and brute-force design search."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .designs import Design
from .errors import ConfigError, DesignError, NumericalError
from .moments import cov_matrix, exact_lse_cov
from .optimality import Criterion

log = logging.getLogger(__name__)

BLOCK = 10_000


@dataclass(frozen=True)
class SimulationConfig:
    points: tuple
    n_rep: int = 100_000
    seed: int = 0

    def __post_init__(self):
        pts = tuple(float(p) for p in np.ravel(self.points))
        if len(pts) < 1:
            raise ConfigError("simulation needs at least one point")
        if not all(np.isfinite(pts)):
            raise ConfigError("simulation points must be finite")
        object.__setattr__(self, "points", pts)
        if self.n_rep < 2:
            raise ConfigError("n_rep must be >= 2")


@dataclass
class MCResult:
    empirical: np.ndarray
    exact: np.ndarray
    se: np.ndarray
    jitter: float

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.se > 0, (self.empirical - self.exact) / self.se, 0.0)

    def within(self, k: float = 5.0) -> bool:
        return bool(np.all(np.abs(self.z) <= k))

    def to_json(self) -> dict:
        return {"empirical": self.empirical.tolist(), "exact": self.exact.tolist(),
                "se": self.se.tolist(), "z": self.z.tolist(), "jitter": self.jitter}


def _cholesky(S: np.ndarray):
    """Cholesky factor with diagonal jitter escalating from 1e-14 to 1e-10 of the trace."""
    tr = float(np.trace(S))
    try:
        return np.linalg.cholesky(S), 0.0
    except np.linalg.LinAlgError:
        pass
    for e in range(-14, -9):
        jit = 10.0**e * tr
        try:
            return np.linalg.cholesky(S + jit * np.eye(S.shape[0])), jit
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("Gram matrix is not positive semidefinite (Cholesky failed with jitter 1e-10 * trace)")


def simulate_lse_cov(config: SimulationConfig, basis, kernel) -> MCResult:
    """Empirical covariance of the OLS estimate under Gaussian errors with covariance K.

    Replications run in fixed blocks, each with its own Philox stream spawned
    from ``seed``, so the result does not depend on how blocks are scheduled.
    """
    if kernel.singular_on_diagonal:
        raise ConfigError("Monte Carlo sampling needs a non-singular kernel")
    x = np.asarray(config.points)
    X = basis(x).reshape(x.size, -1)
    S = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
    L, jitter = _cholesky(S)
    exact = exact_lse_cov(x, basis, kernel)
    # theta_hat - theta = H e with H = (X^T X)^-1 X^T
    H = np.linalg.solve(X.T @ X, X.T)
    m = X.shape[1]
    n_blocks = -(-config.n_rep // BLOCK)
    seeds = np.random.SeedSequence(config.seed).spawn(n_blocks)
    s1 = np.zeros((m, m))
    s2 = np.zeros((m, m))
    done = 0
    for ss in seeds:
        n = min(BLOCK, config.n_rep - done)
        rng = np.random.Generator(np.random.Philox(ss))
        z = rng.standard_normal((n, x.size))
        est = (z @ L.T) @ H.T                      # (n, m)
        prod = est[:, :, None] * est[:, None, :]
        s1 += prod.sum(axis=0)
        s2 += (prod**2).sum(axis=0)
        done += n
    n = config.n_rep
    emp = s1 / n
    var = np.maximum(s2 / n - emp**2, 0.0) * n / (n - 1)
    return MCResult(emp, exact, np.sqrt(var / n), jitter)


@dataclass
class BruteForceResult:
    best: Design
    value: float
    table: list = field(repr=False)
    skipped: list = field(default_factory=list, repr=False)

    def ties(self, tol: float = 1e-12) -> list:
        return [d for d, v in self.table if abs(v - self.value) <= tol * max(1.0, abs(self.value))]


def symmetric_candidates(grid_n: int = 41, weight_step: float = 1.0 / 30, lower=-1.0, upper=1.0):
    """Symmetric 2-point {-a, a} and 3-point {-a, 0, a} designs on an equispaced grid."""
    if grid_n % 2 == 0:
        raise ConfigError("grid_n must be odd so that the grid is symmetric about the centre")
    grid = np.linspace(lower, upper, grid_n)
    centre = 0.5 * (lower + upper)
    half = grid[grid > centre] - centre
    nw = int(round(0.5 / weight_step))
    ws = [k * weight_step for k in range(1, nw) if k * weight_step < 0.5 - 1e-12]
    for a in half:
        yield Design([centre - a, centre + a])
    for a, w in itertools.product(half, ws):
        yield Design([centre - a, centre, centre + a], [w, 1.0 - 2.0 * w, w])


def brute_force_best_design(candidates, basis, kernel, criterion=Criterion("D"), policy="smooth") -> BruteForceResult:
    """Evaluate Phi(D(xi)) for every candidate and return the minimizer with the full table."""
    if candidates is None or candidates == "symmetric":
        candidates = symmetric_candidates()
    table, skipped = [], []
    for d in candidates:
        try:
            val = criterion.value(cov_matrix(d, basis, kernel, policy=policy).D)
        except (DesignError, np.linalg.LinAlgError) as exc:
            log.info("skipping candidate %r: %s", d, exc)
            skipped.append((d, str(exc)))
            continue
        table.append((d, val))
    if not table:
        raise NumericalError("every candidate design was singular")
    i = int(np.argmin([v for _, v in table]))
    return BruteForceResult(table[i][0], table[i][1], table, skipped)
