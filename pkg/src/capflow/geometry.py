"""Axisymmetric capillary hypersurfaces represented by planar profile curves.

A hypersurface of revolution in the unit ball of R^{n+1} is stored as the
polyline of its profile in the half-plane ``(r, z)``, ``r >= 0``, ordered from
the point on the symmetry axis to the boundary node on the unit circle.  The
symmetry axis is the last coordinate direction ``e``.

Orientation: with the unit tangent ``T = (r', z')`` the normal is
``nu = (z', -r')``.  On a spherical cap this gives principal curvatures
``+1/R`` and ``nu = -e`` at the apex, i.e. ``nu`` points away from the
enclosed region and the second fundamental form is non-negative on convex
surfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from numba import njit
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from ._special import gauss_legendre, sphere_area
from .errors import ConstraintError, DegenerateCurveError, DomainError, GeometryError
from .report import VerificationReport

SPHERE_TOL = 1e-12
SPACING_TOL = 0.05
ANGLE_REPAIR_TOL = 1e-12
ANGLE_REPAIR_MAXIT = 50


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta <= 0.5 * math.pi + 1e-14):
        raise DomainError(f"contact angle theta={theta!r} outside (0, pi/2]")
    return min(theta, 0.5 * math.pi)


def check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise DomainError(f"dimension n={n!r} must be an integer >= 2")
    return int(n)


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Profile polyline of an axisymmetric theta-capillary hypersurface.

    Parameters
    ----------
    n : int
        Dimension of the hypersurface; the ambient ball is (n+1)-dimensional.
    theta : float
        Contact angle in (0, pi/2].
    r, z : array_like
        Node coordinates, ``r[0] == 0`` on the axis, last node on the unit
        circle.
    meta : dict
        Free-form provenance (generator name, flags).  Not compared.
    """

    n: int
    theta: float
    r: np.ndarray
    z: np.ndarray
    axis_unit: tuple[float, float] = (0.0, 1.0)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        z = np.array(self.z, dtype=float)
        if r.ndim != 1 or r.shape != z.shape:
            raise GeometryError("r and z must be 1-D arrays of equal length")
        if r.size < 5:
            raise GeometryError("a profile needs at least 5 nodes")
        r.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "n", check_n(self.n))

    @property
    def M(self) -> int:
        return self.r.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.column_stack([self.r, self.z])

    def with_nodes(self, r, z, **meta) -> "ProfileCurve":
        return ProfileCurve(self.n, self.theta, r, z, meta=dict(self.meta, **meta))


@dataclass(frozen=True)
class CapSpec:
    """Spherical cap of radius ``R`` whose axis makes angle ``tilt`` with ``e``."""

    theta: float
    R: float
    tilt: float = 0.0

    @property
    def center_distance(self) -> float:
        return cap_center_distance(self.theta, self.R)


def cap_center_distance(theta: float, R: float) -> float:
    return math.sqrt(R * R + 2.0 * R * math.cos(theta) + 1.0)


def cap_angles(theta: float, R: float) -> tuple[float, float]:
    """Opening angle ``beta`` of the cap arc and polar angle ``alpha`` of its boundary.

    Uses ``sin(beta) = sin(theta)/d`` and ``sin(alpha) = R sin(theta)/d`` so
    that neither angle suffers from ``arccos`` near 1.
    """
    s, c = math.sin(theta), math.cos(theta)
    return math.atan2(s, R + c), math.atan2(R * s, 1.0 + R * c)


@dataclass(frozen=True, eq=False)
class SurfaceFrame:
    n: int
    theta: float
    r: np.ndarray
    z: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    kappa_prof: np.ndarray
    kappa_rot: np.ndarray
    ds: np.ndarray
    area_weight: np.ndarray

    @property
    def nr(self) -> np.ndarray:
        return self.normal[:, 0]

    @property
    def nz(self) -> np.ndarray:
        return self.normal[:, 1]


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------

@njit(cache=True)
def fd_weights(x0, xs, m):
    """Finite-difference weights at ``x0`` for derivatives 0..m (Fornberg)."""
    nn = xs.shape[0]
    c = np.zeros((nn, m + 1))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, nn):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


@njit(cache=True)
def circle_end_tangent(ar, az, br, bz, cr, cz):
    """Unit tangent at A of the circle through A, B, C, oriented from B to A.

    Exact on circular arcs and second-order accurate on smooth curves; falls
    back to the chord direction for collinear points.
    """
    a = complex(ar, az)
    b = complex(br, bz)
    c = complex(cr, cz)
    den = b - c
    t = (b - a) * (c - a) / den
    mag = abs(t)
    if mag == 0.0 or not np.isfinite(mag):
        t = a - b
        mag = abs(t)
    t = t / mag
    d = a - b
    if t.real * d.real + t.imag * d.imag < 0.0:
        t = -t
    return t.real, t.imag


@njit(cache=True)
def frame_kernel(r, z):
    """Tangent, curvatures and chord lengths of a profile polyline.

    Returns ``(tr, tz, kp, kr, ds)``; the normal is ``(tz, -tr)``.
    """
    M = r.shape[0] - 1
    ds = np.empty(M)
    p = np.empty(M + 1)
    p[0] = 0.0
    for j in range(M):
        dr = r[j + 1] - r[j]
        dz = z[j + 1] - z[j]
        ds[j] = math.sqrt(dr * dr + dz * dz)
        p[j + 1] = p[j] + ds[j]
    rp = np.empty(M + 1)
    zp = np.empty(M + 1)
    rpp = np.empty(M + 1)
    zpp = np.empty(M + 1)
    # axis: r odd, z even under reflection through the axis
    h = ds[0]
    rp[0] = r[1] / h
    zp[0] = 0.0
    rpp[0] = 0.0
    zpp[0] = 2.0 * (z[1] - z[0]) / (h * h)
    for j in range(1, M):
        h1 = ds[j - 1]
        h2 = ds[j]
        i1 = 1.0 / h1
        i2 = 1.0 / h2
        i12 = i1 * i2
        iss = 1.0 / (h1 + h2)
        wm = -h2 * i1 * iss
        w0 = (h2 - h1) * i12
        wp = h1 * i2 * iss
        rp[j] = wm * r[j - 1] + w0 * r[j] + wp * r[j + 1]
        zp[j] = wm * z[j - 1] + w0 * z[j] + wp * z[j + 1]
        vm = 2.0 * i1 * iss
        v0 = -2.0 * i12
        vp = 2.0 * i2 * iss
        rpp[j] = vm * r[j - 1] + v0 * r[j] + vp * r[j + 1]
        zpp[j] = vm * z[j - 1] + v0 * z[j] + vp * z[j + 1]
    # boundary: one-sided stencils, 4 nodes for x', 5 for x''
    w = fd_weights(p[M], p[M - 4:M + 1], 2)
    rp[M] = 0.0
    zp[M] = 0.0
    rpp[M] = 0.0
    zpp[M] = 0.0
    w1 = fd_weights(p[M], p[M - 3:M + 1], 1)
    for i in range(4):
        rp[M] += w1[i, 1] * r[M - 3 + i]
        zp[M] += w1[i, 1] * z[M - 3 + i]
    for i in range(5):
        rpp[M] += w[i, 2] * r[M - 4 + i]
        zpp[M] += w[i, 2] * z[M - 4 + i]

    tr = np.empty(M + 1)
    tz = np.empty(M + 1)
    kp = np.empty(M + 1)
    kr = np.empty(M + 1)
    for j in range(M + 1):
        isp = 1.0 / math.sqrt(rp[j] * rp[j] + zp[j] * zp[j])
        tr[j] = rp[j] * isp
        tz[j] = zp[j] * isp
        kp[j] = (rp[j] * zpp[j] - zp[j] * rpp[j]) * (isp * isp * isp)
    tr[M], tz[M] = circle_end_tangent(r[M], z[M], r[M - 1], z[M - 1], r[M - 2], z[M - 2])
    kr[0] = kp[0]
    for j in range(1, M + 1):
        kr[j] = tz[j] / r[j]
    return tr, tz, kp, kr, ds


@njit(cache=True)
def boundary_angle(r, z, a):
    """Contact angle obtained when the boundary node sits at polar angle ``a``."""
    M = r.shape[0] - 1
    br = math.sin(a)
    bz = math.cos(a)
    tr, tz = circle_end_tangent(br, bz, r[M - 1], z[M - 1], r[M - 2], z[M - 2])
    # on the unit sphere <x, nu> = -cos(a + phi) with phi the tangent angle
    return a + math.atan2(tz, tr)


@njit(cache=True)
def repair_angle(r, z, theta, tol, maxit):
    """Slide the boundary node along the unit circle until the measured contact
    angle equals ``theta``.  Works in place; returns the iteration count or -1."""
    M = r.shape[0] - 1
    a = math.atan2(r[M], z[M])
    h = math.hypot(r[M] - r[M - 1], z[M] - z[M - 1])
    da = 1e-6 * h
    for it in range(maxit + 1):
        g = boundary_angle(r, z, a) - theta
        if abs(g) <= tol:
            r[M] = math.sin(a)
            z[M] = math.cos(a)
            return it
        dg = (boundary_angle(r, z, a + da) - boundary_angle(r, z, a - da)) / (2.0 * da)
        if dg == 0.0 or not np.isfinite(dg):
            return -1
        step = -g / dg
        lim = 0.5 * h
        if step > lim:
            step = lim
        elif step < -lim:
            step = -lim
        a += step
    return -1


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def frame(curve: ProfileCurve) -> SurfaceFrame:
    """Unit tangent and normal, principal curvatures and area weights per node.

    Derivatives are taken with respect to cumulative chord length: centered
    three-point stencils in the interior, reflection through the axis at the
    first node, and one-sided stencils at the boundary node, where the tangent
    is taken from the circle through the last three nodes.
    """
    r = np.ascontiguousarray(curve.r)
    z = np.ascontiguousarray(curve.z)
    d = np.hypot(np.diff(r), np.diff(z))
    if np.any(d <= 0.0):
        j = int(np.argmin(d))
        raise DegenerateCurveError(f"nodes {j} and {j + 1} coincide")
    tr, tz, kp, kr, ds = frame_kernel(r, z)
    half = np.zeros(curve.M + 1)
    half[:-1] += 0.5 * ds
    half[1:] += 0.5 * ds
    weight = sphere_area(curve.n) * r ** (curve.n - 1) * half
    return SurfaceFrame(
        n=curve.n, theta=curve.theta, r=r, z=z,
        tangent=np.column_stack([tr, tz]),
        normal=np.column_stack([tz, -tr]),
        kappa_prof=kp, kappa_rot=kr, ds=ds, area_weight=weight,
    )


def contact_angle(curve: ProfileCurve) -> float:
    """Angle between the hypersurface and the unit sphere at the boundary."""
    fr = frame(curve)
    c = -(curve.r[-1] * fr.nr[-1] + curve.z[-1] * fr.nz[-1])
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def make_cap(n: int, theta: float, R: float, M: int = 400) -> ProfileCurve:
    """Axisymmetric theta-capillary spherical cap of radius ``R``.

    The cap is the part inside the ball of the sphere of radius ``R`` centred
    at ``sqrt(R^2 + 2 R cos(theta) + 1) e``; nodes are equally spaced in arc
    length from the apex to the unit circle.
    """
    theta = check_theta(theta)
    n = check_n(n)
    if not (R > 0.0 and math.isfinite(R)):
        raise DomainError(f"cap radius R={R!r} must be positive")
    if M < 16:
        raise DomainError("make_cap needs M >= 16")
    d = cap_center_distance(theta, R)
    beta_m, alpha = cap_angles(theta, R)
    if not (0.0 < beta_m < math.pi and 0.0 < alpha):
        raise GeometryError("cap does not meet the unit sphere")
    beta = beta_m * np.arange(M + 1) / M
    r = R * np.sin(beta)
    z = d - R * np.cos(beta)
    r[0] = 0.0
    r[-1] = math.sin(alpha)
    z[-1] = math.cos(alpha)
    return ProfileCurve(n, theta, r, z, meta={"kind": "cap", "R": R})


def make_flat_ball(n: int, theta: float, M: int = 400) -> ProfileCurve:
    """The flat disk ``{z = cos(theta)}`` inside the ball."""
    theta = check_theta(theta)
    if M < 4:
        raise DomainError("make_flat_ball needs M >= 4")
    r = np.linspace(0.0, math.sin(theta), M + 1)
    z = np.full(M + 1, math.cos(theta))
    return ProfileCurve(n, theta, r, z, meta={"kind": "flat"})


def _cumulative_gl(func: Callable, s: np.ndarray, order: int = 10) -> np.ndarray:
    """Cumulative integral of ``func`` at the points ``s`` (s[0] = 0)."""
    x, w = gauss_legendre(order)
    a, b = s[:-1], s[1:]
    pts = a[:, None] + (b - a)[:, None] * x[None, :]
    seg = (func(pts) * w[None, :]).sum(axis=1) * (b - a)
    return np.concatenate([[0.0], np.cumsum(seg)])


def profile_from_tangent_angle(n: int, theta: float, phi: Callable, M: int,
                               length_hint: float = 1.0, meta: dict | None = None) -> ProfileCurve:
    """Build a capillary profile from its tangent angle as a function of arc length.

    The curve ``r(s) = int cos(phi)``, ``z(s) = z0 + int sin(phi)`` starts on
    the axis (``phi(0)`` must be 0).  Its length ``L`` is fixed by requiring the
    end point to lie on the unit circle with contact angle ``theta``; the
    apex height ``z0`` then follows.  Nodes are equally spaced in arc length and
    the discrete contact angle is repaired on the boundary node.
    """
    theta = check_theta(theta)

    def r_of(s):
        return integrate.quad(lambda t: math.cos(phi(t)), 0.0, s, epsabs=1e-14, epsrel=1e-13,
                              limit=200)[0]

    def gap(s):
        return r_of(s) - math.sin(theta - phi(s))

    step = length_hint / 64.0
    lo, hi = 0.0, None
    s = step
    while s < 20.0 * length_hint + 20.0:
        if phi(s) >= theta:
            break
        if gap(s) > 0.0:
            hi = s
            break
        lo = s
        s += step
    if hi is None:
        raise GeometryError("profile never meets the unit sphere at the prescribed angle")
    L = optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    alpha = theta - phi(L)
    if not (0.0 < alpha <= theta):
        raise GeometryError("boundary polar angle outside (0, theta]")
    s = L * np.arange(M + 1) / M
    r = _cumulative_gl(lambda t: np.cos(phi(t)), s)
    zz = _cumulative_gl(lambda t: np.sin(phi(t)), s)
    z0 = math.cos(alpha) - zz[-1]
    z = z0 + zz
    r[0] = 0.0
    r[-1] = math.sin(alpha)
    z[-1] = math.cos(alpha)
    if repair_angle(r, z, theta, ANGLE_REPAIR_TOL, ANGLE_REPAIR_MAXIT) < 0:
        raise ConstraintError("contact-angle repair did not converge")
    return ProfileCurve(n, theta, r, z, meta=dict(meta or {}, length=L))


def make_perturbed_cap(n: int, theta: float, R: float, mode: int, amplitude: float,
                       M: int = 400) -> ProfileCurve:
    """Cap whose profile is displaced normally by about ``amplitude*cos(mode*pi*s/L)``.

    The displacement is imposed through the tangent angle,
    ``phi(s) = s/R + amplitude*(mode*pi/L)*sin(mode*pi*s/L)`` with ``L`` the
    arc length of the unperturbed profile, so that the result stays exactly
    capillary.  ``meta["horocap_strict"]`` records whether the result is
    strictly horocap-convex; it is the caller's decision what to do otherwise.
    """
    from .convexity import horocap_residual

    if int(mode) != mode or mode < 1:
        raise DomainError("mode must be a positive integer")
    if amplitude == 0.0:
        curve = make_cap(n, theta, R, M)
        return curve.with_nodes(curve.r, curve.z, kind="perturbed", R=R, mode=mode,
                                amplitude=0.0, horocap_strict=True)
    theta = check_theta(theta)
    if not R > 0.0:
        raise DomainError("cap radius must be positive")
    L = R * cap_angles(theta, R)[0]
    k = mode * math.pi / L
    eps = float(amplitude)

    def phi(s):
        return s / R + eps * k * np.sin(k * s)

    curve = profile_from_tangent_angle(n, theta, phi, M, length_hint=L,
                                       meta={"kind": "perturbed", "R": R, "mode": mode,
                                             "amplitude": eps})
    rep = validate(curve)
    if not rep.passed:
        raise GeometryError("perturbed cap is invalid: "
                            + ", ".join(c.name for c in rep.failures()))
    strict = horocap_residual(curve).strict
    return curve.with_nodes(curve.r, curve.z, horocap_strict=bool(strict))


def _reflected_spline(curve: ProfileCurve) -> tuple[CubicSpline, np.ndarray]:
    """Cubic spline through the profile and its mirror image across the axis.

    Parameterized by cumulative chord length; returns the spline and the
    parameter values of the original nodes.
    """
    r, z = curve.r, curve.z
    d = np.hypot(np.diff(r), np.diff(z))
    if np.any(d <= 0.0):
        raise DegenerateCurveError("duplicate nodes: cannot fit a spline")
    p = np.concatenate([[0.0], np.cumsum(d)])
    pe = np.concatenate([-p[:0:-1], p])
    xe = np.column_stack([np.concatenate([-r[:0:-1], r]), np.concatenate([z[:0:-1], z])])
    return CubicSpline(pe, xe), p


def spline_arclength(spline: CubicSpline, p: np.ndarray, order: int = 8) -> np.ndarray:
    """Cumulative arc length of ``spline`` at the increasing parameters ``p`` (p[0] = 0)."""
    der = spline.derivative()
    return _cumulative_gl(lambda t: np.linalg.norm(der(t), axis=-1), p, order)


def resample(curve: ProfileCurve, M: int | None = None) -> ProfileCurve:
    """Redistribute ``M + 1`` nodes uniformly in arc length along a cubic spline.

    End nodes are kept (the boundary node is re-projected onto the unit circle).
    """
    M = curve.M if M is None else int(M)
    if M < 4:
        raise DomainError("resample needs M >= 4")
    spline, p = _reflected_spline(curve)
    der = spline.derivative()
    S = spline_arclength(spline, p)
    targets = S[-1] * np.arange(1, M) / M
    idx = np.clip(np.searchsorted(S, targets, side="right") - 1, 0, curve.M - 1)
    lo = p[idx]
    t = lo + (targets - S[idx]) / np.maximum(S[idx + 1] - S[idx], 1e-300) * (p[idx + 1] - p[idx])
    x, w = gauss_legendre(8)
    for _ in range(8):
        pts = lo[:, None] + (t - lo)[:, None] * x[None, :]
        partial = (np.linalg.norm(der(pts), axis=-1) * w).sum(axis=1) * (t - lo)
        resid = S[idx] + partial - targets
        speed = np.linalg.norm(der(t), axis=-1)
        t = t - resid / speed
        if np.max(np.abs(resid)) < 1e-15:
            break
    inner = spline(t)
    rho = math.hypot(curve.r[-1], curve.z[-1])
    r = np.concatenate([[0.0], inner[:, 0], [curve.r[-1] / rho]])
    z = np.concatenate([[curve.z[0]], inner[:, 1], [curve.z[-1] / rho]])
    return curve.with_nodes(r, z)


class CapFit(NamedTuple):
    R: float
    dist: float
    unimodal: bool


def cap_deviation(curve: ProfileCurve, R: float) -> float:
    """Largest distance of a node from the axisymmetric cap of radius ``R``."""
    d = cap_center_distance(curve.theta, R)
    return float(np.max(np.abs(np.hypot(curve.r, curve.z - d) - R)))


def hausdorff_to_cap(curve: ProfileCurve, R_min: float = 1e-3, R_max: float = 1e3) -> CapFit:
    """Best-fitting axisymmetric capillary cap in the max-norm sense.

    Scans ``log R`` on a grid, then refines around the best grid point with a
    bounded scalar minimization.  ``unimodal`` is False when the scan finds
    several local minima; the refinement then starts from the global grid
    minimum.
    """
    grid = np.linspace(math.log(R_min), math.log(R_max), 241)
    vals = np.array([cap_deviation(curve, math.exp(g)) for g in grid])
    i = int(np.argmin(vals))
    interior = (vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:])
    unimodal = int(interior.sum()) <= 1
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda g: cap_deviation(curve, math.exp(g)), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-13, "maxiter": 500})
    if res.fun <= vals[i]:
        return CapFit(float(math.exp(res.x)), float(res.fun), unimodal)
    return CapFit(float(math.exp(grid[i])), float(vals[i]), unimodal)


def validate(curve: ProfileCurve) -> VerificationReport:
    """Check every profile invariant and report the measured slack of each."""
    from shapely.geometry import LineString

    rep = VerificationReport("profile")
    r, z = curve.r, curve.z
    rep.add("axis_node_on_axis", -abs(r[0]), 0.0, passed=r[0] == 0.0)
    rep.add("interior_r_positive", float(np.min(r[1:])), 0.0, passed=bool(np.min(r[1:]) > 0.0))
    rho_b = r[-1] ** 2 + z[-1] ** 2
    rep.add("boundary_on_sphere", SPHERE_TOL - abs(rho_b - 1.0), 0.0)
    rep.add("inside_ball", float(np.min(1.0 - np.hypot(r, z))), SPHERE_TOL)
    rep.add("above_south_pole", float(np.min(z + 1.0)), 0.0, passed=bool(np.min(z) > -1.0))
    ds = np.hypot(np.diff(r), np.diff(z))
    rep.add("distinct_nodes", float(np.min(ds)), 0.0, passed=bool(np.min(ds) > 0.0))
    simple = bool(np.all(np.isfinite(r)) and np.all(np.isfinite(z))
                  and LineString(np.column_stack([r, z])).is_simple)
    rep.add("simple", 1.0 if simple else -1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(ds[1:] / ds[:-1] - 1.0)
    worst = float(np.max(ratio)) if ratio.size and np.all(np.isfinite(ratio)) else math.inf
    rep.add("spacing_uniform", SPACING_TOL - worst, 0.0)
    return rep
