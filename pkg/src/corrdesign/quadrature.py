"""Quadrature rules used by the moment and spectral computations.

The tanh-sinh rule returns, next to the nodes, their distances to both
interval ends.  Integrands with endpoint singularities (log, power,
Jacobi weights) are evaluated from those distances, which stay accurate
down to ~1e-37 where ``u - a`` computed in floating point would be zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

_T_MAX = 4.0


@dataclass(frozen=True)
class Rule:
    nodes: np.ndarray
    weights: np.ndarray
    dist_lo: np.ndarray
    dist_hi: np.ndarray


@lru_cache(maxsize=64)
def _tanh_sinh_unit(n: int):
    # rule on [0, 1]; n is the number of nodes (odd count enforced)
    k = max(n // 2, 2)
    h = _T_MAX / k
    t = h * np.arange(-k, k + 1)
    s = 0.5 * np.pi * np.sinh(t)
    lo = np.exp(-np.logaddexp(0.0, -2.0 * s))  # 1 / (1 + e^{-2s})
    hi = np.exp(-np.logaddexp(0.0, 2.0 * s))
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2 * 0.5
    return lo, hi, w


def tanh_sinh(a: float, b: float, n: int = 201) -> Rule:
    """Tanh-sinh rule with ``n`` nodes on [a, b]."""
    lo, hi, w = _tanh_sinh_unit(int(n))
    L = b - a
    dist_lo = L * lo
    dist_hi = L * hi
    nodes = np.where(lo <= 0.5, a + dist_lo, b - dist_hi)
    return Rule(nodes, L * w, dist_lo, dist_hi)


@lru_cache(maxsize=64)
def _gauss_jacobi(n: int, alpha: float, beta: float):
    x, w = special.roots_jacobi(n, alpha, beta)
    return x, w / w.sum()


def gauss_jacobi(n: int, alpha: float, beta: float, a: float = -1.0, b: float = 1.0):
    """Nodes and normalized weights for the density prop. to (b-x)^alpha (x-a)^beta."""
    x, w = _gauss_jacobi(int(n), float(alpha), float(beta))
    return a + (b - a) * (x + 1.0) / 2.0, w.copy()


def split_points(a: float, b: float, points) -> np.ndarray:
    """Sorted unique breakpoints strictly inside (a, b), plus the ends."""
    inner = [p for p in points if a < p < b]
    return np.unique(np.concatenate([[a, b], inner]))
