"""Horocap-convexity and the capillary support-function inequality.

For a hypersurface of revolution the tensor ``phi*h - psi*g`` with
``phi = <x, e> - cos(theta)`` and ``psi = 1 + <nu, e>`` is diagonal in the
principal frame, so its eigenvalues are ``phi*kappa_prof - psi`` and
``phi*kappa_rot - psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .geometry import ProfileCurve, SurfaceFrame, cap_center_distance, check_theta, frame

STRICT_TOL = 1e-10
CONVEX_TOL = 1e-8


@dataclass(frozen=True)
class HorocapReport:
    min_height_slack: float
    min_rho: float
    strict: bool
    rho_prof: np.ndarray
    rho_rot: np.ndarray

    @property
    def weak(self) -> bool:
        return self.min_height_slack >= -STRICT_TOL and self.min_rho >= -STRICT_TOL


def horocap_eigenvalues(fr: SurfaceFrame, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the horocap tensor along the profile and rotational directions."""
    height = fr.z - math.cos(theta)
    psi = 1.0 + fr.nz
    return height * fr.kappa_prof - psi, height * fr.kappa_rot - psi


def horocap_residual(curve: ProfileCurve, tol: float = STRICT_TOL) -> HorocapReport:
    fr = frame(curve)
    rp, rr = horocap_eigenvalues(fr, curve.theta)
    slack = float(np.min(curve.z - math.cos(curve.theta)))
    min_rho = float(min(rp.min(), rr.min()))
    return HorocapReport(slack, min_rho, bool(slack > tol and min_rho > tol), rp, rr)


def cap_horocap_residual(theta: float, R: float, tilt: float = 0.0) -> float:
    """Constant horocap eigenvalue of the cap of radius ``R`` whose axis is tilted by ``tilt``."""
    theta = check_theta(theta)
    if not R > 0.0:
        raise DomainError("cap radius must be positive")
    if not 0.0 <= tilt < 0.5 * math.pi:
        raise DomainError(f"tilt={tilt!r} outside [0, pi/2)")
    d = cap_center_distance(theta, R)
    return (d * math.cos(tilt) - math.cos(theta) - R) / R


def equality_tilt(theta: float, R: float) -> float:
    """Tilt at which the cap touches the plane ``<x, e> = cos(theta)``."""
    return math.acos((math.cos(theta) + R) / cap_center_distance(theta, R))


def support_values(curve: ProfileCurve, fr: SurfaceFrame | None = None) -> np.ndarray:
    """``<x - cos(theta) e, nu>`` at every node."""
    fr = frame(curve) if fr is None else fr
    return fr.r * fr.nr + (fr.z - math.cos(curve.theta)) * fr.nz


def support_check(curve: ProfileCurve, convex_tol: float = CONVEX_TOL) -> float:
    """Maximum of the shifted support function; non-positive for convex capillary surfaces."""
    fr = frame(curve)
    kmin = float(min(fr.kappa_prof.min(), fr.kappa_rot.min()))
    if kmin < -convex_tol:
        raise PreconditionError(f"surface is not convex (min curvature {kmin:.3e})")
    return float(np.max(support_values(curve, fr)))
