"""Normalized elementary symmetric functions of rotationally symmetric spectra.

For a hypersurface of revolution the principal curvatures are the profile
curvature (once) and the rotational curvature (``n - 1`` times), so

    sigma_k = C(n-1, k) kr^k + C(n-1, k-1) kp kr^(k-1)

and ``H_k = sigma_k / C(n, k)``.  All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from numba import njit

from .errors import ConeViolationError, DomainError


@dataclass(frozen=True)
class CurvatureSpectrum:
    n: int
    kappa_prof: np.ndarray | float
    kappa_rot: np.ndarray | float

    def expanded(self) -> np.ndarray:
        """The full n-tuple (kp, kr, ..., kr), along the last axis."""
        kp = np.asarray(self.kappa_prof, dtype=float)
        kr = np.asarray(self.kappa_rot, dtype=float)
        return np.stack([kp] + [kr] * (self.n - 1), axis=-1)


def normalized_symmetric(k: int, spec: CurvatureSpectrum):
    """``H_k`` of the spectrum; ``H_0 = 1``."""
    n = spec.n
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside 0..{n}")
    kp = np.asarray(spec.kappa_prof, dtype=float)
    kr = np.asarray(spec.kappa_rot, dtype=float)
    if k == 0:
        return np.ones(np.broadcast(kp, kr).shape)[()]
    sigma = comb(n - 1, k) * kr ** k + comb(n - 1, k - 1) * kp * kr ** (k - 1)
    return sigma / comb(n, k)


def curvature_quotient(k: int, spec: CurvatureSpectrum):
    """``F = H_k / H_{k-1}`` on the Garding cone ``{H_1 > 0, ..., H_k > 0}``.

    Raises
    ------
    ConeViolationError
        Naming the first ``j <= k`` with ``H_j <= 0`` somewhere.
    """
    if not 1 <= k <= spec.n:
        raise DomainError(f"quotient index k={k} outside 1..{spec.n}")
    prev = None
    for j in range(1, k + 1):
        hj = normalized_symmetric(j, spec)
        bad = ~(np.asarray(hj) > 0.0)
        if np.any(bad):
            node = int(np.flatnonzero(np.atleast_1d(bad))[0])
            raise ConeViolationError(f"H_{j} <= 0 (node {node}): spectrum left the Garding cone",
                                     index=j, node=node)
        if j == k - 1:
            prev = hj
    if k == 1:
        prev = 1.0
    return hj / prev


def newton_maclaurin_margin(k: int, spec: CurvatureSpectrum):
    """``H_{k-1}^2 - H_{k-2} H_k``, non-negative on the cone."""
    if not 2 <= k <= spec.n:
        raise DomainError(f"k={k} outside 2..{spec.n}")
    a = normalized_symmetric(k - 1, spec)
    return a * a - normalized_symmetric(k - 2, spec) * normalized_symmetric(k, spec)


def brute_force_symmetric(k: int, kappas: np.ndarray) -> float:
    """``sigma_k / C(n, k)`` of an explicit n-tuple via polynomial coefficients.

    Independent of the closed form above: sigma_k are the coefficients of
    ``prod_i (1 + kappa_i t)``.
    """
    kappas = np.asarray(kappas, dtype=float)
    n = kappas.size
    coeffs = np.array([1.0])
    for kap in kappas:
        coeffs = np.convolve(coeffs, [1.0, kap])
    return float(coeffs[k] / comb(n, k))


@njit(cache=True)
def quotient_kernel(n, k, kp, kr, out_F):
    """Fill ``out_F`` with ``H_k/H_{k-1}``; return the first node leaving the
    cone (or -1) for use inside compiled loops."""
    binom_n = np.empty(n + 1)
    binom_m = np.empty(n + 1)
    for j in range(n + 1):
        binom_n[j] = _comb(n, j)
        binom_m[j] = _comb(n - 1, j)
    for i in range(kp.shape[0]):
        a = kp[i]
        b = kr[i]
        prev = 1.0
        cur = 1.0
        bp = 1.0  # b ** (j - 1)
        for j in range(1, k + 1):
            s = binom_m[j] * bp * b + binom_m[j - 1] * a * bp
            hj = s / binom_n[j]
            if not hj > 0.0:
                return i
            prev = cur
            cur = hj
            bp *= b
        out_F[i] = cur / prev
    return -1


@njit(cache=True)
def _comb(n, k):
    if k < 0 or k > n:
        return 0.0
    c = 1.0
    for i in range(k):
        c = c * (n - i) / (i + 1)
    return c
