"""Mercer eigen-relations  int K(x, u) phi(u) nu(du) = lam phi(x)  for known pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .basis import gegenbauer
from .designs import DensityDesign, arcsine_design, generalized_arcsine_design, uniform_design
from .errors import BracketError, ConfigError, QuadratureError
from .kernels import CovarianceKernel
from .moments import kernel_integral
from .quadrature import tanh_sinh


@dataclass(frozen=True, eq=False)
class EigenPairSpec:
    kernel: CovarianceKernel
    measure: DensityDesign
    eigenfunction: Callable
    eigenvalue: float | None = None
    name: str = ""


class MercerReport(NamedTuple):
    max_residual: float
    eigenvalue_hat: float
    reference_point: float
    richardson: float


def apply_operator(spec: EigenPairSpec, x, quad_n: int = 128) -> np.ndarray:
    """(T_K phi)(x) = int K(x, u) phi(u) nu(du)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([kernel_integral(spec.kernel, spec.measure, spec.eigenfunction, float(v), quad_n) for v in x])


def mercer_residual(spec: EigenPairSpec, test_points, quad_n: int = 128, tol: float = 1e-6) -> MercerReport:
    """Residual of the eigen-relation on ``test_points`` and the empirical eigenvalue.

    The quadrature error is estimated by repeating with half the nodes; an
    estimate above ``tol`` (relative to max |T phi| or max |phi|) raises
    QuadratureError.
    """
    if quad_n < 64:
        raise ConfigError("mercer_residual needs quad_n >= 64")
    x = np.atleast_1d(np.asarray(test_points, dtype=float))
    Tphi = apply_operator(spec, x, quad_n)
    coarse = apply_operator(spec, x, quad_n // 2)
    phi = np.asarray(spec.eigenfunction(x), dtype=float)
    # relative to |phi| too, so a zero eigenvalue does not blow up the estimate
    scale = max(float(np.abs(Tphi).max()), float(np.abs(phi).max()), 1e-300)
    rich = float(np.abs(Tphi - coarse).max()) / scale
    if rich > tol:
        raise QuadratureError(f"quadrature not converged: half-order difference {rich:.2e} > {tol:.1e}")
    i0 = int(np.argmax(np.abs(phi)))
    if phi[i0] == 0:
        raise ConfigError("eigenfunction vanishes at every test point")
    lam_hat = float(Tphi[i0] / phi[i0])
    lam = spec.eigenvalue if spec.eigenvalue is not None else lam_hat
    return MercerReport(float(np.abs(Tphi - lam * phi).max()), lam_hat, float(x[i0]), rich)


def _freq_fn(lam):
    # tan(2w) = -2 lam w / (lam^2 - w^2) with both poles multiplied out
    return lambda w: math.sin(2 * w) * (lam * lam - w * w) + 2 * lam * w * math.cos(2 * w)


def exp_kernel_frequencies(lam: float, k_max: int, xtol: float = 1e-12) -> np.ndarray:
    """First k_max positive roots of tan(2w) = -2 lam w / (lam^2 - w^2).

    On every branch ((2j-1)pi/4, (2j+1)pi/4) of tan(2w) the difference
    tan(2w) - rhs is increasing, so each branch holds one root; the branch
    containing w = lam is split there and holds one root on each side.
    The piece (0, min(lam, pi/4)) holds none.
    """
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    if k_max < 1:
        return np.empty(0)
    F = _freq_fn(lam)
    roots = []
    j = 0
    while len(roots) < k_max:
        lo, hi = max((2 * j - 1) * math.pi / 4, 0.0), (2 * j + 1) * math.pi / 4
        pieces = [(lo, lam), (lam, hi)] if lo < lam < hi else [(lo, hi)]
        for a, b in pieces:
            if a == 0.0 and (b <= lam):
                continue
            fa, fb = F(a), F(b)
            if fa == 0.0:
                roots.append(a)
                continue
            if fa * fb > 0:
                raise BracketError(f"no sign change of the frequency equation on [{a}, {b}]")
            roots.append(brentq(F, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))
        j += 1
    return np.array(sorted(roots)[:k_max])


def exp_kernel_eigenpair(lam: float, k: int, omega: float | None = None) -> EigenPairSpec:
    """k-th eigenpair (k >= 1) of exp(-lam |u - v|) with the uniform law on [-1, 1]."""
    w = exp_kernel_frequencies(lam, k)[-1] if omega is None else omega
    return EigenPairSpec(
        CovarianceKernel.exponential(lam), uniform_design(),
        lambda x: np.sin(w * np.asarray(x) + k * np.pi / 2),
        lam / (lam * lam + w * w), f"exponential:{lam}:{k}",
    )


def chebyshev_eigenvalue(n: int) -> float:
    return 2.0 * math.log(2.0) if n == 0 else 2.0 / n


def chebyshev_log_integral(n: int, x, quad_n: int = 2048) -> np.ndarray:
    """-int T_n(v) ln (x - v)^2 dv / (pi sqrt(1 - v^2)) via v = cos t.

    The integrand becomes -cos(n t) ln(cos t - cos s)^2 / pi on [0, pi]
    with x = cos s, split at t = s; the log uses
    cos t - cos s = -2 sin((t + s)/2) sin((t - s)/2) with exact distances.
    """
    out = []
    for xv in np.atleast_1d(np.asarray(x, dtype=float)):
        if not -1 < xv < 1:
            raise ConfigError("x must lie in (-1, 1)")
        s = math.acos(xv)
        total = 0.0
        for a, b in ((0.0, s), (s, math.pi)):
            rule = tanh_sinh(a, b, quad_n)
            t = rule.nodes
            half = 0.5 * (rule.dist_hi if b == s else rule.dist_lo)
            logsq = 2.0 * (math.log(2.0) + np.log(np.abs(np.sin(0.5 * (t + s)))) + np.log(np.sin(half)))
            total += rule.weights @ (np.cos(n * t) * logsq)
        out.append(-total / math.pi)
    return np.array(out)


def chebyshev_log_identity(n: int, x_points, quad_n: int = 2048) -> float:
    """max |lam_n T_n(x) - (integral)| over x_points."""
    x = np.atleast_1d(np.asarray(x_points, dtype=float))
    lhs = chebyshev_eigenvalue(n) * np.cos(n * np.arccos(x))
    return float(np.abs(lhs - chebyshev_log_integral(n, x, quad_n)).max())


def chebyshev_log_pair(n: int) -> EigenPairSpec:
    return EigenPairSpec(
        CovarianceKernel.logarithmic(), arcsine_design(),
        lambda x: np.cos(n * np.arccos(np.clip(x, -1, 1))),
        chebyshev_eigenvalue(n), f"chebyshev_log:{n}",
    )


def gegenbauer_eigenvalue(n: int, alpha: float) -> float:
    """pi Gamma(n + alpha) / (cos(alpha pi / 2) Gamma(alpha) n!) for the unnormalized weight."""
    return math.pi * math.gamma(n + alpha) / (math.cos(alpha * math.pi / 2) * math.gamma(alpha) * math.factorial(n))


def gegenbauer_power_pair(n: int, alpha: float) -> EigenPairSpec:
    """C_n^(alpha/2) under 1/|u - v|^alpha with the normalized Beta-type law.

    The closed-form eigenvalue refers to the weight (1 - x^2)^((alpha-1)/2)
    without normalization, so the probability-measure eigenvalue is scaled
    by the density's normalizing constant.
    """
    dd = generalized_arcsine_design(alpha)
    return EigenPairSpec(
        CovarianceKernel.power_singular(alpha), dd,
        lambda x: gegenbauer(n, alpha / 2, np.asarray(x, dtype=float))[n],
        gegenbauer_eigenvalue(n, alpha) * dd.norm_const, f"gegenbauer_power:{n}:{alpha}",
    )


def brownian_pair(k: int) -> EigenPairSpec:
    w = (k + 0.5) * math.pi
    return EigenPairSpec(
        CovarianceKernel.brownian_min(), uniform_design(0.0, 1.0),
        lambda x: np.sin(w * np.asarray(x, dtype=float)),
        1.0 / (w * w), f"brownian:{k}",
    )


def _unit_interval_rule(quad_n):
    u, w = np.polynomial.legendre.leggauss(quad_n)
    return 0.5 * (u + 1.0), 0.5 * w


def cosine_projection(kernel: CovarianceKernel, j: int, quad_n: int = 256) -> float:
    """int_0^1 rho(u) f_j(u) du for the normalized cosine basis function f_j."""
    u, w = _unit_interval_rule(quad_n)
    fj = np.ones_like(u) if j == 1 else math.sqrt(2.0) * np.cos(2 * math.pi * (j - 1) * u)
    return float(w @ (kernel.rho(u) * fj))


def cosine_eigenvalue(kernel: CovarianceKernel, j: int, quad_n: int = 256) -> float:
    """Eigenvalue of f_j: int_0^1 rho(u) cos(2 pi (j - 1) u) du.

    For j >= 2 this is the projection divided by sqrt(2), since f_j
    carries the normalizing factor sqrt(2).
    """
    u, w = _unit_interval_rule(quad_n)
    return float(w @ (kernel.rho(u) * np.cos(2 * math.pi * (j - 1) * u)))


def cosine_periodic_pair(j: int, kernel: CovarianceKernel | None = None) -> EigenPairSpec:
    kernel = CovarianceKernel.periodic_cos_mix((1.0,), (1,), (2,)) if kernel is None else kernel
    if not kernel.periodic:
        raise ConfigError("cosine eigenpairs need a periodic kernel")

    def fj(x):
        x = np.asarray(x, dtype=float)
        return np.ones_like(x) if j == 1 else math.sqrt(2.0) * np.cos(2 * math.pi * (j - 1) * x)

    return EigenPairSpec(kernel, uniform_design(0.0, 1.0), fj, cosine_eigenvalue(kernel, j), f"cosine:{j}")


def fourier_log_sine(n: int, k: int, quad_n: int = 1024) -> float:
    """int_0^pi cos(2nt) ln sin^2(t) cos(2kt) dt by tanh-sinh."""
    rule = tanh_sinh(0.0, math.pi, quad_n)
    t = rule.nodes
    sin_t = np.sin(np.minimum(rule.dist_lo, rule.dist_hi))
    return float(rule.weights @ (np.cos(2 * n * t) * 2.0 * np.log(sin_t) * np.cos(2 * k * t)))


def fourier_gamma(k: int) -> float:
    return -2 * math.pi * math.log(2.0) if k == 0 else -math.pi / k


def fourier_coefficient_check(n_max: int = 3, quad_n: int = 1024) -> float:
    """Max deviation of the integrals from (gamma_|n+k| + gamma_|n-k|) / 2 over n, k <= n_max."""
    worst = 0.0
    for n in range(n_max + 1):
        for k in range(n_max + 1):
            ref = 0.5 * (fourier_gamma(abs(n + k)) + fourier_gamma(abs(n - k)))
            worst = max(worst, abs(fourier_log_sine(n, k, quad_n) - ref))
    return worst


def named_pair(spec: str) -> EigenPairSpec:
    """``chebyshev_log:n``, ``gegenbauer_power:n:alpha``, ``brownian:k``, ``cosine:j``, ``exponential:lam:k``."""
    name, *args = spec.split(":")
    try:
        if name == "chebyshev_log":
            return chebyshev_log_pair(int(args[0]))
        if name == "gegenbauer_power":
            return gegenbauer_power_pair(int(args[0]), float(args[1]) if len(args) > 1 else 0.5)
        if name == "brownian":
            return brownian_pair(int(args[0]))
        if name == "cosine":
            return cosine_periodic_pair(int(args[0]))
        if name == "exponential":
            return exp_kernel_eigenpair(float(args[0]), int(args[1]))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad eigenpair spec {spec!r}") from exc
    raise ConfigError(f"unknown eigenpair {spec!r}")
