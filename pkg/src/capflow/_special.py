"""Small closed-form helpers shared by several modules."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

SIN_GL_ORDER = 28


@lru_cache(maxsize=None)
def sphere_area(n: int) -> float:
    """Measure of the unit sphere S^{n-1} in R^n, i.e. 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def sin_power_integral(j: int, phi):
    """Integral of sin^j over [0, phi], elementwise for array ``phi``.

    Gauss-Legendre quadrature for ``|phi| <= pi`` (free of the cancellation
    the reduction formula suffers for small ``phi``), reduction formula beyond.
    """
    phi = np.asarray(phi, dtype=float)
    if np.all(np.abs(phi) <= math.pi):
        x, w = gauss_legendre(SIN_GL_ORDER)
        return phi * (np.sin(phi[..., None] * x) ** j @ w)
    g_prev = phi.copy()                 # j = 0
    if j == 0:
        return g_prev
    g = 1.0 - np.cos(phi)               # j = 1
    if j == 1:
        return g
    even, odd = g_prev, g
    s, c = np.sin(phi), np.cos(phi)
    for m in range(2, j + 1):
        lower = even if m % 2 == 0 else odd
        cur = -s ** (m - 1) * c / m + (m - 1) / m * lower
        if m % 2 == 0:
            even = cur
        else:
            odd = cur
    return even if j % 2 == 0 else odd


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w
