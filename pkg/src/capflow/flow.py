"""Front-tracking time stepping of capillary curvature flows on profile curves.

Two normal speeds are supported:

* the locally constrained quotient flow
  ``f = <x + cos(theta) nu, e> / F - <X_e, nu>`` with ``F = H_k / H_{k-1}``;
* capillary mean curvature flow ``f = -H`` with the unnormalized mean
  curvature ``H = kappa_prof + (n-1) kappa_rot``.

Nodes move by explicit Euler steps along the normal.  The boundary node is
then pulled back to the unit circle and slid along it until the discrete
contact angle is ``theta``; periodic arc-length resampling supplies the
tangential redistribution.  The inner loop is compiled with numba;
:func:`step` is a plain numpy reference of a single step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numba import njit

from .convexity import horocap_residual
from .errors import ConeViolationError, DomainError, FlowBlowUpError
from .geometry import (
    ANGLE_REPAIR_MAXIT,
    ANGLE_REPAIR_TOL,
    ProfileCurve,
    SurfaceFrame,
    contact_angle,
    frame,
    frame_kernel,
    hausdorff_to_cap,
    repair_angle,
    resample,
)
from .quermass import quermass_theta
from .symfunc import CurvatureSpectrum, curvature_quotient, quotient_kernel

log = logging.getLogger(__name__)

MAX_HALVINGS = 20
SPHERE_SLACK = 1e-12
CHORD_RATIO_MAX = 1.5

# status codes of the compiled driver
_BATCH_DONE, _T_STOP, _STATIONARY, _BLOWUP, _CONE, _RESAMPLE = range(6)


def conformal_killing(x) -> np.ndarray:
    """``X_e(x) = <x, e> x - (|x|^2 + 1) e / 2`` for points given as ``(..., dim)``."""
    x = np.asarray(x, dtype=float)
    xe = x[..., -1]
    out = xe[..., None] * x
    out[..., -1] -= 0.5 * (np.sum(x * x, axis=-1) + 1.0)
    return out


def killing_normal(fr: SurfaceFrame) -> np.ndarray:
    """``<X_e, nu>`` at the nodes of a profile frame."""
    r, z = fr.r, fr.z
    return z * r * fr.nr + (z * z - 0.5 * (r * r + z * z + 1.0)) * fr.nz


def capillary_support(fr: SurfaceFrame) -> np.ndarray:
    """``<x + cos(theta) nu, e>``."""
    return fr.z + math.cos(fr.theta) * fr.nz


def speed_locally_constrained(fr: SurfaceFrame, k: int) -> np.ndarray:
    spec = CurvatureSpectrum(fr.n, fr.kappa_prof, fr.kappa_rot)
    F = curvature_quotient(k, spec)
    return capillary_support(fr) / F - killing_normal(fr)


def speed_mcf(fr: SurfaceFrame) -> np.ndarray:
    return -(fr.kappa_prof + (fr.n - 1) * fr.kappa_rot)


@dataclass(frozen=True)
class FlowConfig:
    """Step controls and stop criteria.

    ``kind`` is ``"quotient"`` (with index ``k``) or ``"mcf"``.  ``M``
    resamples the initial curve when given.  ``t_marks`` are times at which a
    diagnostic record is forced.  ``est_window`` bounds the times entering the
    running supremum of ``t / min(F)^2``.  A positive ``tol_cap`` also stops
    the run at the first record whose distance to the best-fitting cap is
    below it; the discrete speed on an exact cap is of order ``ds^2``, so the
    speed threshold alone may never be reached.
    """

    kind: str = "quotient"
    k: int = 1
    cfl: float = 0.2
    dt_max: float = 1e-3
    t_end: float = 50.0
    resample_every: int = 1000
    M: int | None = None
    tol_stationary: float = 1e-8
    tol_cap: float = 0.0
    diagnostics_every: int = 2000
    t_marks: tuple = ()
    spacing_tol: float = 0.04
    est_window: float = 1.0
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.kind not in ("quotient", "mcf"):
            raise DomainError(f"unknown flow kind {self.kind!r}")
        if not 0.0 < self.cfl < 1.0:
            raise DomainError("cfl must lie in (0, 1)")
        for name in ("dt_max", "t_end", "tol_stationary", "spacing_tol", "est_window"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive")
        if self.resample_every < 1 or self.diagnostics_every < 1:
            raise DomainError("cadences must be positive step counts")
        object.__setattr__(self, "t_marks", tuple(sorted(float(t) for t in self.t_marks)))

    @property
    def kind_code(self) -> int:
        return 0 if self.kind == "quotient" else 1


@dataclass(frozen=True)
class FlowState:
    t: float
    curve: ProfileCurve
    last_speed_sup: float = math.inf
    step_count: int = 0
    last_dt: float = 0.0
    halvings: int = 0
    est_sup: float = 0.0


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    W: tuple
    min_rho: float
    min_height_slack: float
    minF: float
    maxKappa: float
    angle_defect: float
    cap_dist: float
    speed_sup: float
    step: int = 0
    cap_R: float = math.nan
    min_killing_normal: float = math.nan

    @property
    def starshaped(self) -> bool:
        """North pole inside the enclosed region and ``<X_e, nu> > 0`` everywhere."""
        return self.min_killing_normal > 0.0

    def row(self) -> list[float]:
        return [self.t, *self.W, self.min_rho, self.min_height_slack, self.minF,
                self.maxKappa, self.angle_defect, self.cap_dist, self.speed_sup]


def csv_header(n: int) -> list[str]:
    return (["t"] + [f"W{i}" for i in range(n + 2)]
            + ["min_rho", "min_height_slack", "minF", "maxKappa", "angle_defect",
               "cap_dist", "speed_sup"])


@dataclass
class FlowResult:
    trajectory: list
    final: FlowState
    stationary: bool
    converged: bool = False
    limit_radius: float = math.nan


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------

@njit(cache=True)
def _speed(kind, n, k, cth, r, z, tr, tz, kp, kr, f, F):
    """Fill the speed ``f`` (and ``F`` for the quotient flow); return the first
    node outside the Garding cone or -1."""
    M1 = r.shape[0]
    if kind == 1:
        for j in range(M1):
            f[j] = -(kp[j] + (n - 1) * kr[j])
            F[j] = kp[j] + (n - 1) * kr[j]
        return -1
    bad = quotient_kernel(n, k, kp, kr, F)
    if bad >= 0:
        return bad
    for j in range(M1):
        nr = tz[j]
        nz = -tr[j]
        a = z[j] + cth * nz
        xn = z[j] * r[j] * nr + (z[j] * z[j] - 0.5 * (r[j] * r[j] + z[j] * z[j] + 1.0)) * nz
        f[j] = a / F[j] - xn
    return -1


@njit(cache=True)
def _cfl_dt_quot(cth, z, tr, ds, F, cfl):
    h = ds.min()
    worst = 0.0
    for j in range(z.shape[0]):
        a = z[j] - cth * tr[j]      # nu_z = -T_r
        c = a / (F[j] * F[j])
        if c > worst:
            worst = c
    if worst <= 0.0:
        return np.inf
    return cfl * h * h / worst


@njit(cache=True)
def _candidate_ok(r, z):
    M = r.shape[0] - 1
    for j in range(M + 1):
        if not (np.isfinite(r[j]) and np.isfinite(z[j])):
            return False
        if j > 0 and not r[j] > 0.0:
            return False
        if r[j] * r[j] + z[j] * z[j] > 1.0 + 2.0 * SPHERE_SLACK:
            return False
        if not z[j] > -1.0:
            return False
    prev = -1.0
    for j in range(M):
        dr = r[j + 1] - r[j]
        dz = z[j + 1] - z[j]
        d = math.sqrt(dr * dr + dz * dz)
        if not d > 0.0:
            return False
        if prev > 0.0 and (d > CHORD_RATIO_MAX * prev or prev > CHORD_RATIO_MAX * d):
            return False
        prev = d
    return True


@njit(cache=True)
def _try_move(r, z, f, tr, tz, dt, theta, out_r, out_z):
    M = r.shape[0] - 1
    for j in range(M + 1):
        out_r[j] = r[j] + dt * f[j] * tz[j]
        out_z[j] = z[j] - dt * f[j] * tr[j]
    out_r[0] = 0.0
    rho = math.hypot(out_r[M], out_z[M])
    if not (rho > 0.0 and np.isfinite(rho)):
        return False
    out_r[M] /= rho
    out_z[M] /= rho
    if repair_angle(out_r, out_z, theta, ANGLE_REPAIR_TOL, ANGLE_REPAIR_MAXIT) < 0:
        return False
    return _candidate_ok(out_r, out_z)


@njit(cache=True)
def _spacing_defect(ds):
    worst = 0.0
    for j in range(1, ds.shape[0]):
        q = abs(ds[j] / ds[j - 1] - 1.0)
        if q > worst:
            worst = q
    return worst


@njit(cache=True)
def _advance(r, z, n, k, kind, theta, cfl, dt_max, t, t_stop, max_steps, tol_stat,
             spacing_tol, est_window, est_sup):
    """Run up to ``max_steps`` accepted steps in place.

    Returns ``(status, steps, t, speed_sup, dt, est_sup, node, minF)``.
    """
    M1 = r.shape[0]
    cth = math.cos(theta)
    f = np.empty(M1)
    F = np.empty(M1)
    nr_ = np.empty(M1)
    nz_ = np.empty(M1)
    tr, tz, kp, kr, ds = frame_kernel(r, z)
    steps = 0
    speed_sup = np.inf
    dt = 0.0
    minF = np.nan
    while True:
        bad = _speed(kind, n, k, cth, r, z, tr, tz, kp, kr, f, F)
        if bad >= 0:
            return _CONE, steps, t, speed_sup, dt, est_sup, bad, minF
        speed_sup = np.abs(f).max()
        minF = F.min()
        if kind == 0 and t > 0.0 and t <= est_window * (1.0 + 1e-12):
            q = t / (minF * minF)
            if q > est_sup:
                est_sup = q
        if speed_sup < tol_stat:
            return _STATIONARY, steps, t, speed_sup, dt, est_sup, -1, minF
        if steps >= max_steps:
            return _BATCH_DONE, steps, t, speed_sup, dt, est_sup, -1, minF
        if t >= t_stop:
            return _T_STOP, steps, t, speed_sup, dt, est_sup, -1, minF
        if kind == 1:
            h = ds.min()
            dt = cfl * h * h / n
        else:
            dt = _cfl_dt_quot(cth, z, tr, ds, F, cfl)
        if dt > dt_max:
            dt = dt_max
        last = False
        if t + dt >= t_stop:
            dt = t_stop - t
            last = True
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            if _try_move(r, z, f, tr, tz, dt, theta, nr_, nz_):
                tr2, tz2, kp2, kr2, ds2 = frame_kernel(nr_, nz_)
                if kind == 1 or quotient_kernel(n, k, kp2, kr2, F) < 0:
                    accepted = True
                    break
            dt *= 0.5
            last = False
        if not accepted:
            return _BLOWUP, steps, t, speed_sup, dt, est_sup, -1, minF
        for j in range(M1):
            r[j] = nr_[j]
            z[j] = nz_[j]
        tr, tz, kp, kr, ds = tr2, tz2, kp2, kr2, ds2
        t = t_stop if last else t + dt
        steps += 1
        if _spacing_defect(ds) > spacing_tol:
            return _RESAMPLE, steps, t, speed_sup, dt, est_sup, -1, minF


# --------------------------------------------------------------------------
# numpy reference step
# --------------------------------------------------------------------------

def _default_speed(config: FlowConfig) -> Callable:
    if config.kind == "mcf":
        return lambda fr, attempt: speed_mcf(fr)
    return lambda fr, attempt: speed_locally_constrained(fr, config.k)


def step(state: FlowState, config: FlowConfig, speed_fn: Callable | None = None) -> FlowState:
    """One explicit Euler step with reject-and-halve.

    ``speed_fn(frame, attempt)`` overrides the normal speed; it is re-evaluated
    on every attempt so that tests can inject transient failures.
    """
    curve = state.curve
    fr = frame(curve)
    speed_fn = speed_fn or _default_speed(config)
    spec = CurvatureSpectrum(curve.n, fr.kappa_prof, fr.kappa_rot)
    if config.kind == "mcf":
        dt = config.cfl * fr.ds.min() ** 2 / curve.n
    else:
        F = curvature_quotient(config.k, spec)
        worst = float(np.max(capillary_support(fr) / F ** 2))
        dt = config.cfl * fr.ds.min() ** 2 / worst if worst > 0 else math.inf
    dt = min(dt, config.dt_max)
    for attempt in range(MAX_HALVINGS + 1):
        f = np.asarray(speed_fn(fr, attempt), dtype=float)
        r = np.array(curve.r)
        z = np.array(curve.z)
        with np.errstate(invalid="ignore", over="ignore"):
            ok = bool(_try_move(np.ascontiguousarray(curve.r), np.ascontiguousarray(curve.z), f,
                                np.ascontiguousarray(fr.tangent[:, 0]),
                                np.ascontiguousarray(fr.tangent[:, 1]), dt, curve.theta, r, z))
        if ok and config.kind == "quotient":
            fr2 = frame(curve.with_nodes(r, z))
            spec2 = CurvatureSpectrum(curve.n, fr2.kappa_prof, fr2.kappa_rot)
            try:
                curvature_quotient(config.k, spec2)
            except ConeViolationError:
                ok = False
        if ok:
            new = curve.with_nodes(r, z)
            count = state.step_count + 1
            if count % config.resample_every == 0:
                new = _resample_repaired(new)
            return FlowState(state.t + dt, new, float(np.max(np.abs(f))), count, dt, attempt,
                             state.est_sup)
        dt *= 0.5
    raise FlowBlowUpError(f"step rejected after {MAX_HALVINGS} halvings at t={state.t:.6g}")


def _resample_repaired(curve: ProfileCurve, M: int | None = None) -> ProfileCurve:
    new = resample(curve, M)
    r, z = np.array(new.r), np.array(new.z)
    if repair_angle(r, z, curve.theta, ANGLE_REPAIR_TOL, ANGLE_REPAIR_MAXIT) < 0:
        raise FlowBlowUpError("contact-angle repair failed after resampling")
    return new.with_nodes(r, z)


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def diagnostics(state: FlowState, config: FlowConfig, fit_cap: bool = True) -> TimeSeriesRecord:
    curve = state.curve
    fr = frame(curve)
    q = quermass_theta(curve)
    hr = horocap_residual(curve)
    if config.kind == "quotient":
        spec = CurvatureSpectrum(curve.n, fr.kappa_prof, fr.kappa_rot)
        try:
            F = curvature_quotient(config.k, spec)
            minF = float(F.min())
            speed = capillary_support(fr) / F - killing_normal(fr)
        except ConeViolationError:
            minF = math.nan
            speed = np.full(curve.M + 1, math.nan)
    else:
        speed = speed_mcf(fr)
        minF = float(np.min(-speed))
    kmax = float(max(fr.kappa_prof.max(), fr.kappa_rot.max()))
    fit = hausdorff_to_cap(curve) if fit_cap else None
    return TimeSeriesRecord(
        t=state.t, W=tuple(float(w) for w in q.W), min_rho=hr.min_rho,
        min_height_slack=hr.min_height_slack, minF=minF, maxKappa=kmax,
        angle_defect=abs(contact_angle(curve) - curve.theta),
        cap_dist=fit.dist if fit else math.nan,
        speed_sup=float(np.max(np.abs(speed))), step=state.step_count,
        cap_R=fit.R if fit else math.nan,
        min_killing_normal=float(np.min(killing_normal(fr))),
    )


def run(init: ProfileCurve, config: FlowConfig, fit_cap: bool = True,
        on_record: Callable | None = None) -> FlowResult:
    """Evolve ``init`` until it is stationary or ``t_end`` is reached.

    ``on_record(record, state)`` is called after every diagnostic record.

    Raises
    ------
    ConeViolationError, FlowBlowUpError
        With the partial trajectory attached as ``err.trajectory``.
    """
    curve = init
    if config.M is not None and config.M != init.M:
        curve = _resample_repaired(init, config.M)
    if config.kind == "quotient":
        hr = horocap_residual(curve)
        if not hr.strict:
            log.warning("initial curve is not strictly horocap-convex (min_rho=%.3e)", hr.min_rho)
    state = FlowState(0.0, curve)
    trajectory: list[TimeSeriesRecord] = []

    def record(st):
        rec = diagnostics(st, config, fit_cap)
        trajectory.append(rec)
        if on_record is not None:
            on_record(rec, st)

    record(state)
    r = np.array(curve.r)
    z = np.array(curve.z)
    marks = [tm for tm in config.t_marks if 0.0 < tm < config.t_end]
    since_diag = 0
    since_resample = 0
    stationary = False
    t = 0.0
    steps = 0
    est_sup = 0.0
    speed_sup = math.inf
    dt = 0.0
    while True:
        t_stop = marks[0] if marks else config.t_end
        batch = min(config.diagnostics_every - since_diag, config.resample_every - since_resample,
                    config.max_steps - steps)
        status, done, t, speed_sup, dt, est_sup, node, _ = _advance(
            r, z, init.n, config.k, config.kind_code, init.theta, config.cfl, config.dt_max,
            t, t_stop, batch, config.tol_stationary, config.spacing_tol, config.est_window,
            est_sup)
        steps += done
        since_diag += done
        since_resample += done
        state = FlowState(t, curve.with_nodes(r.copy(), z.copy()), speed_sup, steps, dt, 0, est_sup)
        if status == _CONE:
            err = ConeViolationError(f"curvature left the Garding cone at node {node}, t={t:.6g}",
                                     index=config.k, node=node)
            if steps:
                record(state)
            err.trajectory = trajectory
            raise err
        if status == _BLOWUP:
            err = FlowBlowUpError(f"step rejected after {MAX_HALVINGS} halvings at t={t:.6g}")
            record(state)
            err.trajectory = trajectory
            raise err
        if status == _STATIONARY:
            stationary = True
            break
        if status == _RESAMPLE or since_resample >= config.resample_every:
            new = _resample_repaired(state.curve)
            r[:] = new.r
            z[:] = new.z
            state = replace(state, curve=new)
            since_resample = 0
        if status == _T_STOP:
            if marks:
                marks.pop(0)
                record(state)
                since_diag = 0
                continue
            break
        if since_diag >= config.diagnostics_every:
            record(state)
            since_diag = 0
            if config.tol_cap > 0.0 and trajectory[-1].cap_dist < config.tol_cap:
                break
        if steps >= config.max_steps:
            break
    state = FlowState(t, curve.with_nodes(r.copy(), z.copy()), speed_sup, steps, dt, 0, est_sup)
    if trajectory[-1].step != steps or trajectory[-1].t != t:
        record(state)
    last = trajectory[-1]
    converged = stationary or (config.tol_cap > 0.0 and last.cap_dist < config.tol_cap)
    limit = last.cap_R if converged else math.nan
    return FlowResult(trajectory, state, stationary, converged, limit)
