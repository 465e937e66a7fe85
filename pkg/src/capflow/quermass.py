"""Capillary quermassintegrals of axisymmetric hypersurfaces.

The enclosed region is bounded by the hypersurface and by the geodesic ball
of the unit sphere around the north pole ``e`` cut out by the boundary.  Its
boundary trace is a geodesic ball of polar radius ``alpha``, whose spherical
quermassintegrals follow from the space-form recursion

    W_0 = |S^{n-1}| int_0^alpha sin^{n-1},   W_1 = |S^{n-1}| sin^{n-1}(alpha) / n,
    W_{l+1} = |S^{n-1}| sin^{n-1}(alpha) cot^l(alpha) / n + l/(n-l+1) W_{l-1}.

Two quadrature routes are offered.  ``"spline"`` (default) integrates on a
cubic spline through the nodes with Gauss-Legendre points, after integrating
the profile-curvature terms by parts so that only first derivatives enter;
``"trapezoid"`` uses nodal curvatures from :func:`capflow.geometry.frame`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from ._special import gauss_legendre, sin_power_integral, sphere_area
from .errors import DomainError, GeometryError
from .geometry import (
    ANGLE_REPAIR_MAXIT,
    ANGLE_REPAIR_TOL,
    ProfileCurve,
    _reflected_spline,
    cap_angles,
    cap_center_distance,
    check_theta,
    frame,
    repair_angle,
)
from .symfunc import CurvatureSpectrum, normalized_symmetric

GL_ORDER = 6


@dataclass(frozen=True)
class QuermassVector:
    n: int
    theta: float
    W: np.ndarray
    volume: float
    curvature_integrals: np.ndarray
    alpha: float
    spherical: np.ndarray

    def as_row(self) -> list[float]:
        return [self.alpha, *self.W.tolist()]


def boundary_polar_angle(curve: ProfileCurve) -> float:
    """Polar angle of the boundary node measured from the north pole."""
    return float(math.atan2(curve.r[-1], curve.z[-1]))


class _SplineSamples(NamedTuple):
    r: np.ndarray
    dr: np.ndarray
    dz: np.ndarray
    speed: np.ndarray
    weight: np.ndarray       # Gauss weight times parameter interval
    phi: np.ndarray
    phi_end: float
    phi_start: float


def _spline_samples(curve: ProfileCurve) -> _SplineSamples:
    spline, p = _reflected_spline(curve)
    x, w = gauss_legendre(GL_ORDER)
    a, b = p[:-1], p[1:]
    pts = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
    wts = ((b - a)[:, None] * w[None, :]).ravel()
    pos = spline(pts)
    der = spline(pts, 1)
    speed = np.hypot(der[:, 0], der[:, 1])
    ends = spline(np.array([0.0, p[-1]]), 1)
    angles = np.unwrap(np.concatenate([[math.atan2(ends[0, 1], ends[0, 0])],
                                       np.arctan2(der[:, 1], der[:, 0]),
                                       [math.atan2(ends[1, 1], ends[1, 0])]]))
    return _SplineSamples(pos[:, 0], der[:, 0], der[:, 1], speed, wts, angles[1:-1],
                          float(angles[-1]), float(angles[0]))


def _spline_curvature_integrals(curve: ProfileCurve) -> np.ndarray:
    """``int_Sigma H_k dA`` for k = 0..n on the spline route."""
    n = curve.n
    sm = _spline_samples(curve)
    ds = sm.speed * sm.weight
    r = sm.r
    sphi, cphi = np.sin(sm.phi), np.cos(sm.phi)
    out = np.empty(n + 1)
    out[0] = np.sum(r ** (n - 1) * ds)
    rL = float(curve.r[-1])
    for k in range(1, n + 1):
        total = 0.0
        if k <= n - 1:
            total += comb(n - 1, k) * np.sum(sphi ** k * r ** (n - 1 - k) * ds)
        # int phi' sin^{k-1}(phi) r^{n-k} ds by parts
        G = sin_power_integral(k - 1, sm.phi)
        G_end = float(sin_power_integral(k - 1, sm.phi_end))
        G_start = float(sin_power_integral(k - 1, sm.phi_start))
        if k < n:
            part = G_end * rL ** (n - k) - (n - k) * np.sum(G * r ** (n - k - 1) * cphi * ds)
        else:
            part = G_end - G_start
        total += comb(n - 1, k - 1) * part
        out[k] = total / comb(n, k)
    return sphere_area(n) * out


def _trapezoid_curvature_integrals(curve: ProfileCurve) -> np.ndarray:
    fr = frame(curve)
    spec = CurvatureSpectrum(curve.n, fr.kappa_prof, fr.kappa_rot)
    return np.array([np.sum(normalized_symmetric(k, spec) * fr.area_weight)
                     for k in range(curve.n + 1)])


def curvature_integral(curve: ProfileCurve, k: int, method: str = "spline") -> float:
    """``int_Sigma H_k dA``."""
    if not 0 <= k <= curve.n:
        raise DomainError(f"k={k} outside 0..{curve.n}")
    return float(curvature_integrals(curve, method)[k])


def curvature_integrals(curve: ProfileCurve, method: str = "spline") -> np.ndarray:
    if method == "spline":
        return _spline_curvature_integrals(curve)
    if method == "trapezoid":
        return _trapezoid_curvature_integrals(curve)
    raise DomainError(f"unknown quadrature method {method!r}")


def enclosed_volume(curve: ProfileCurve, method: str = "spline") -> float:
    """(n+1)-volume of the region between the hypersurface and the unit sphere.

    Uses ``|S^{n-1}| / n`` times the closed line integral of ``r^n dz`` over
    the profile followed by the unit-circle arc back to the north pole.
    """
    n = curve.n
    if method == "spline":
        sm = _spline_samples(curve)
        prof = np.sum(sm.r ** n * sm.dz * sm.weight)
    elif method == "polyline":
        ra, rb = curve.r[:-1], curve.r[1:]
        dz = np.diff(curve.z)
        mean_pow = sum(ra ** i * rb ** (n - i) for i in range(n + 1)) / (n + 1)
        prof = np.sum(mean_pow * dz)
    else:
        raise DomainError(f"unknown quadrature method {method!r}")
    alpha = boundary_polar_angle(curve)
    arc = float(sin_power_integral(n + 1, alpha))
    vol = sphere_area(n) / n * (prof + arc)
    if not vol > 0.0:
        raise GeometryError("enclosed region has non-positive volume")
    return float(vol)


def spherical_ball_quermass(n: int, alpha: float, l: int | None = None):
    """Quermassintegrals of the geodesic ball of radius ``alpha`` in S^n.

    Returns all ``W_0..W_n`` when ``l`` is None, else ``W_l``.
    """
    if not (0.0 < alpha <= 0.5 * math.pi + 1e-14):
        raise DomainError(f"geodesic radius alpha={alpha!r} outside (0, pi/2]")
    om = sphere_area(n)
    s, c = math.sin(alpha), math.cos(alpha)
    W = np.empty(n + 1)
    W[0] = om * float(sin_power_integral(n - 1, alpha))
    W[1] = om * s ** (n - 1) / n
    cot = c / s
    for ell in range(1, n):
        W[ell + 1] = om * s ** (n - 1) * cot ** ell / n + ell / (n - ell + 1) * W[ell - 1]
    return W if l is None else float(W[l])


def assemble_theta_quermass(n: int, theta: float, volume: float, curv: np.ndarray,
                            ws: np.ndarray) -> np.ndarray:
    """Combine volume, ``int H_k`` and spherical terms into ``W_{0,theta}..W_{n+1,theta}``."""
    c, s = math.cos(theta), math.sin(theta)
    W = np.empty(n + 2)
    W[0] = volume
    W[1] = (curv[0] - c * ws[0]) / (n + 1)
    for k in range(1, n):
        acc = curv[k] - c * s ** k * ws[k]
        for ell in range(k):
            coef = ((-1) ** (k + ell) / (n - ell) * comb(k, ell)
                    * ((n - k) * c * c + k - ell) * c ** (k - 1 - ell) * s ** ell)
            acc -= coef * ws[ell]
        W[k + 1] = acc / (n + 1)
    acc = curv[n]
    for ell in range(n):
        acc -= (-1) ** (n + ell) * comb(n, ell) * c ** (n - 1 - ell) * s ** ell * ws[ell]
    W[n + 1] = acc / (n + 1)
    return W


def quermass_theta(curve: ProfileCurve, method: str = "spline") -> QuermassVector:
    """All capillary quermassintegrals of ``curve``."""
    volume = enclosed_volume(curve, "spline" if method == "spline" else "polyline")
    curv = curvature_integrals(curve, method)
    alpha = boundary_polar_angle(curve)
    ws = spherical_ball_quermass(curve.n, alpha)
    W = assemble_theta_quermass(curve.n, curve.theta, volume, curv, ws)
    return QuermassVector(curve.n, curve.theta, W, volume, curv, alpha, ws)


def cap_quermass_exact(n: int, theta: float, R: float) -> QuermassVector:
    """Closed-form quermassintegrals of the axisymmetric cap of radius ``R``.

    ``R = inf`` gives the flat ball.
    """
    theta = check_theta(theta)
    om = sphere_area(n)
    c = math.cos(theta)
    if math.isinf(R):
        alpha = theta
        area = om * math.sin(theta) ** n / n
        curv = np.zeros(n + 1)
        curv[0] = area
        volume = om / n * float(sin_power_integral(n + 1, alpha))
    else:
        d = cap_center_distance(theta, R)
        beta, alpha = cap_angles(theta, R)
        area = om * R ** n * float(sin_power_integral(n - 1, beta))
        curv = np.array([area * R ** (-k) for k in range(n + 1)])
        # profile r = R sin(b), z = d - R cos(b), b in [0, beta]
        volume = om / n * (R ** (n + 1) * float(sin_power_integral(n + 1, beta))
                           + float(sin_power_integral(n + 1, alpha)))
    ws = spherical_ball_quermass(n, alpha)
    W = assemble_theta_quermass(n, theta, volume, curv, ws)
    return QuermassVector(n, theta, W, volume, curv, alpha, ws)


def cap_volume_divergence(n: int, theta: float, R: float) -> float:
    """Cap volume from the divergence theorem, ``(n+1)|vol| = int <x, nu> + |spherical part|``.

    An independent closed form; it loses accuracy for large ``R`` by cancellation.
    """
    om = sphere_area(n)
    d = cap_center_distance(theta, R)
    beta, alpha = cap_angles(theta, R)
    support = om * R ** n * (R * float(sin_power_integral(n - 1, beta))
                             - d * math.sin(beta) ** n / n)
    return (support + om * float(sin_power_integral(n - 1, alpha))) / (n + 1)


class VariationResult(NamedTuple):
    residual: float
    finite_difference: float
    predicted: float


def displace(curve: ProfileCurve, f: np.ndarray, delta: float) -> ProfileCurve:
    """Move every node by ``delta * f * nu`` and restore the capillary constraints.

    The boundary node is slid along the unit circle until the measured contact
    angle is ``theta`` again, so its own displacement is irrelevant.
    """
    fr = frame(curve)
    f = np.asarray(f, dtype=float)
    r = curve.r + delta * f * fr.nr
    z = curve.z + delta * f * fr.nz
    r[0] = 0.0
    rho = math.hypot(r[-1], z[-1])
    r[-1] /= rho
    z[-1] /= rho
    if repair_angle(r, z, curve.theta, ANGLE_REPAIR_TOL, ANGLE_REPAIR_MAXIT) < 0:
        raise GeometryError("displacement destroyed the capillary boundary")
    return curve.with_nodes(r, z)


def variation_check(curve: ProfileCurve, f: np.ndarray, k: int, delta: float,
                    method: str = "spline") -> VariationResult:
    """Compare a difference quotient of ``W_{k,theta}`` with the variation formula.

    The prediction is ``(n+1-k)/(n+1) int H_k f dA`` (nodal trapezoid rule).
    """
    n = curve.n
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside 0..{n}")
    f = np.asarray(f, dtype=float)
    w0 = quermass_theta(curve, method).W[k]
    w1 = quermass_theta(displace(curve, f, delta), method).W[k]
    fd = (w1 - w0) / delta
    fr = frame(curve)
    hk = normalized_symmetric(k, CurvatureSpectrum(n, fr.kappa_prof, fr.kappa_rot))
    pred = (n + 1 - k) / (n + 1) * float(np.sum(hk * f * fr.area_weight))
    return VariationResult(float(fd - pred), float(fd), pred)


def variation_check_extrapolated(curve: ProfileCurve, f: np.ndarray, k: int, delta: float,
                                 method: str = "spline") -> VariationResult:
    """Richardson-extrapolated (in ``delta``) version of :func:`variation_check`."""
    a = variation_check(curve, f, k, delta, method)
    b = variation_check(curve, f, k, 0.5 * delta, method)
    fd = 2.0 * b.finite_difference - a.finite_difference
    return VariationResult(fd - a.predicted, fd, a.predicted)


def normal_velocity(before: ProfileCurve, after: ProfileCurve, step: float,
                    reference: ProfileCurve | None = None) -> np.ndarray:
    """Normal component of ``(after - before) / step`` at the nodes of ``reference``."""
    ref = before if reference is None else reference
    fr = frame(ref)
    vr = (after.r - before.r) / step
    vz = (after.z - before.z) / step
    return vr * fr.nr + vz * fr.nz
