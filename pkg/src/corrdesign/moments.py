"""Moment matrices M, B, Lambda and the LSE covariance D = M^-1 B M^-1.

Atomic designs are summed directly.  Density designs are integrated: the
outer integral uses the Gaussian rule of the density (``quad_n`` nodes),
the inner integral  k(x) = int K(x, u) f(u) xi(du)  is split at the kernel
breakpoints around x and done with tanh-sinh, so log and power
singularities of either the kernel or the density are integrated exactly
rather than sampled.

Singular kernels on atomic designs need a diagonal policy:

``smooth``  replace K by its finite approximant, width = half the minimal
            support gap (default);
``cell``    replace K(x_i, x_i) by the mean of K over the atom's cell;
``error``   refuse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import RegressionBasis
from .designs import Design, DensityDesign
from .errors import ConfigError, NearSingularError, NumericalError, SingularDiagonalError
from .kernels import CovarianceKernel, Family
from .quadrature import split_points, tanh_sinh

POLICIES = ("smooth", "cell", "error")
COND_LIMIT = 1e12
DEFAULT_QUAD_N = 200
DEFAULT_INNER_N = 121
# k(x) of the smoothed log kernel has log-type kinks a width away from the
# interval ends, which slows the outer Gaussian rule down
ROUGH_QUAD_N = 800


def default_quad_n(kernel: CovarianceKernel) -> int:
    return ROUGH_QUAD_N if kernel.family is Family.SMOOTHED_LOG else DEFAULT_QUAD_N


def _cell_widths(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        raise ConfigError("cell policy needs at least two support points")
    gaps = np.diff(x)
    w = np.empty_like(x)
    w[0], w[-1] = gaps[0], gaps[-1]
    w[1:-1] = 0.5 * (gaps[1:] + gaps[:-1])
    return w


def smoothing_width(*supports) -> float:
    x = np.unique(np.concatenate([np.asarray(s, dtype=float) for s in supports]))
    if x.size < 2:
        raise ConfigError("smooth policy needs at least two distinct support points")
    return 0.5 * float(np.diff(x).min())


def resolve_kernel(kernel: CovarianceKernel, policy: str, *supports) -> CovarianceKernel:
    """Kernel actually used for atomic designs under ``policy``."""
    if policy not in POLICIES:
        raise ConfigError(f"unknown diagonal policy {policy!r}; choose from {POLICIES}")
    if kernel.singular_on_diagonal and policy == "smooth":
        return kernel.smoothed(smoothing_width(*supports))
    return kernel


class _Atomic:
    def __init__(self, design: Design, basis, kernel, policy, extra_support=()):
        self.nodes = design.support
        self.weights = design.weights
        self.basis = basis
        self.policy = policy
        self.kernel = resolve_kernel(kernel, policy, design.support, *extra_support)
        self.F = basis(self.nodes)
        self.wF = self.weights[:, None] * self.F
        self.diag = None
        if self.kernel.singular_on_diagonal and policy == "cell":
            widths = _cell_widths(self.nodes)
            self.diag = np.array([self.kernel.cell_mean(w) for w in widths])

    def gram(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        K = np.asarray(self.kernel(x[:, None], self.nodes[None, :]), dtype=float)
        bad = ~np.isfinite(K)
        if bad.any():
            if self.diag is None:
                raise SingularDiagonalError(
                    f"{self.kernel.family.value} kernel is infinite at coinciding points; "
                    "use the 'smooth' or 'cell' policy")
            rows, cols = np.nonzero(bad)
            K[rows, cols] = self.diag[cols]
        return K

    def column(self, x):
        return self.gram(x) @ self.wF


def kernel_integral(kernel, measure: DensityDesign, func, x: float, inner_n: int = DEFAULT_INNER_N):
    """int K(x, u) func(u) measure(du) with breakpoint splitting and tanh-sinh pieces.

    ``func`` maps a vector of nodes to an (n,) or (n, k) array.
    """
    lo, hi = measure.lower, measure.upper
    edges = split_points(lo, hi, kernel.breakpoints(x))
    total = 0.0
    for l, r in zip(edges[:-1], edges[1:]):
        rule = tanh_sinh(l, r, inner_n)
        u = rule.nodes
        if x == l:
            t = rule.dist_lo
        elif x == r:
            t = rule.dist_hi
        else:
            t = np.abs(u - x)
        Kx = kernel.rho(t) if kernel.stationary else kernel(x, u)
        d_lo = rule.dist_lo if l == lo else u - lo
        d_hi = rule.dist_hi if r == hi else hi - u
        wts = rule.weights * Kx * measure.density_dist(u, d_lo, d_hi)
        # the product is finite wherever the integrand is integrable
        wts = np.where(np.isfinite(wts), wts, 0.0)
        total = total + wts @ np.asarray(func(np.clip(u, lo, hi)))
    return total


class _Density:
    def __init__(self, design: DensityDesign, basis, kernel, quad_n, inner_n):
        self.design = design
        self.basis = basis
        self.kernel = kernel
        self.inner_n = inner_n
        self.nodes, self.weights = design.quadrature_rule(quad_n)
        self.F = basis(self.nodes)
        self.wF = self.weights[:, None] * self.F

    def _column_one(self, x: float) -> np.ndarray:
        return kernel_integral(self.kernel, self.design, self.basis, x, self.inner_n)

    def column(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([self._column_one(float(v)) for v in x])


def integrator(design, basis, kernel, policy="smooth", quad_n=None, inner_n=None, extra_support=()):
    if isinstance(design, DensityDesign):
        return _Density(design, basis, kernel, quad_n or default_quad_n(kernel), inner_n or DEFAULT_INNER_N)
    if isinstance(design, Design):
        return _Atomic(design, basis, kernel, policy, extra_support)
    raise TypeError(f"not a design: {design!r}")


def sym_inverse(A: np.ndarray, what: str = "matrix"):
    """Inverse of a symmetric positive definite matrix with condition check."""
    A = 0.5 * (A + A.T)
    evals, V = np.linalg.eigh(A)
    top = evals[-1]
    if not top > 0 or evals[0] <= 1e-12 * np.trace(A):
        raise NearSingularError(f"{what} is not positive definite", np.inf if evals[0] <= 0 else top / evals[0])
    cond = top / evals[0]
    if cond > COND_LIMIT:
        raise NearSingularError(f"{what} is near singular", cond)
    return (V / evals) @ V.T, cond


def info_matrix(design, basis: RegressionBasis, quad_n=None) -> np.ndarray:
    """M(xi) = int f f^T dxi."""
    if isinstance(design, DensityDesign):
        x, w = design.quadrature_rule(quad_n or DEFAULT_QUAD_N)
    else:
        x, w = design.support, design.weights
    F = basis(x)
    M = (w[:, None] * F).T @ F
    return 0.5 * (M + M.T)


def b_matrix(design_xi, design_nu, basis, kernel, policy="smooth", quad_n=None, inner_n=None) -> np.ndarray:
    """B(xi, nu) = int int K(u, v) f(u) f(v)^T xi(du) nu(dv)."""
    extra = (design_nu.support,) if isinstance(design_nu, Design) else ()
    itg = integrator(design_xi, basis, kernel, policy, quad_n, inner_n, extra)
    if isinstance(design_nu, DensityDesign):
        y, v = design_nu.quadrature_rule(quad_n or default_quad_n(kernel))
    else:
        y, v = design_nu.support, design_nu.weights
    Kcol = itg.column(y)                       # k_xi(y_j), shape (n_nu, m)
    B = Kcol.T @ (v[:, None] * basis(y))       # sum_j v_j k(y_j) f(y_j)^T
    if design_nu is design_xi:
        B = 0.5 * (B + B.T)
    return B


@dataclass
class MomentSet:
    M: np.ndarray
    B: np.ndarray
    Lambda: np.ndarray
    D: np.ndarray
    M_inv: np.ndarray
    cond_M: float
    design: object = field(repr=False)
    basis: RegressionBasis = field(repr=False)
    kernel: CovarianceKernel = field(repr=False)
    policy: str = "smooth"
    _itg: object = field(default=None, repr=False)

    def f(self, x):
        return np.atleast_2d(self.basis(np.atleast_1d(x)))

    def kernel_column(self, x):
        """k(x) = int K(x, u) f(u) xi(du), one row per point."""
        return self._itg.column(x)

    @property
    def m(self):
        return self.M.shape[0]

    @property
    def effective_kernel(self):
        return self._itg.kernel


def cov_matrix(design, basis, kernel, policy="smooth", quad_n=None, inner_n=None) -> MomentSet:
    """Full moment set for (design, basis, kernel)."""
    itg = integrator(design, basis, kernel, policy, quad_n, inner_n)
    M = (itg.wF.T @ itg.F)
    M = 0.5 * (M + M.T)
    M_inv, cond = sym_inverse(M, "information matrix M")
    Kcol = itg.column(itg.nodes)
    B = Kcol.T @ itg.wF
    B = 0.5 * (B + B.T)
    D = M_inv @ B @ M_inv
    D = 0.5 * (D + D.T)
    ev = np.linalg.eigvalsh(D)
    # D can vanish when the kernel has no mass on the basis, so scale by K too
    with np.errstate(all="ignore"):
        diag = np.abs(itg.kernel(itg.nodes, itg.nodes))
    kmax = float(diag[np.isfinite(diag)].max(initial=0.0))
    scale = max(abs(np.trace(D)), kmax * np.trace(M_inv) ** 2, 1e-300)
    if ev[0] < -1e-10 * scale:
        raise NumericalError(f"covariance matrix D is not PSD (min eigenvalue {ev[0]:.3e}); "
                             "kernel is not positive definite on this design")
    Lam = B @ M_inv
    return MomentSet(M, B, Lam, D, M_inv, cond, design, basis, kernel, policy, itg)


def _gram_checked(points, kernel):
    if kernel.singular_on_diagonal:
        raise ConfigError("exact finite-sample covariances need a non-singular kernel")
    x = np.asarray(points, dtype=float)
    return np.asarray(kernel(x[:, None], x[None, :]), dtype=float)


def exact_lse_cov(points, basis, kernel) -> np.ndarray:
    """(X^T X)^-1 X^T Sigma X (X^T X)^-1 for N exact observation points."""
    x = np.asarray(points, dtype=float)
    X = np.atleast_2d(basis(x)) if x.size > 1 else basis(x).reshape(1, -1)
    N, m = X.shape
    if N < m or np.linalg.matrix_rank(X) < m:
        raise NearSingularError("design matrix X is rank deficient", np.inf)
    S = _gram_checked(x, kernel)
    XtX_inv, _ = sym_inverse(X.T @ X, "X^T X")
    V = XtX_inv @ (X.T @ S @ X) @ XtX_inv
    return 0.5 * (V + V.T)


def wlse_misspec_cov(points, basis, kernel_guess, kernel_true) -> np.ndarray:
    """Sandwich covariance of weighted LSE built with a (possibly wrong) kernel guess."""
    x = np.asarray(points, dtype=float)
    X = np.atleast_2d(basis(x)) if x.size > 1 else basis(x).reshape(1, -1)
    Sg = _gram_checked(x, kernel_guess)
    St = _gram_checked(x, kernel_true)
    Sg_inv, _ = sym_inverse(Sg, "guessed covariance matrix")
    A = Sg_inv @ X
    H_inv, _ = sym_inverse(X.T @ A, "X^T Sigma^-1 X")
    V = H_inv @ (A.T @ St @ A) @ H_inv
    return 0.5 * (V + V.T)
