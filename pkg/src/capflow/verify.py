"""Identity and inequality checks on single surfaces, collected in reports."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .convexity import horocap_residual, support_check
from .errors import CapflowError, DomainError
from .geometry import ProfileCurve, frame, make_cap, make_perturbed_cap
from .inequalities import FkTable, check_inequality, heintze_karcher_value, hsiung_minkowski_residual
from .quermass import variation_check_extrapolated
from .report import VerificationReport

DEFAULT_TOL = {
    "hm": 1e-4,
    "hk": 1e-6,
    "variation": 1e-3,
    "horocap": 1e-10,
    "support": 1e-8,
    "inequality": 1e-6,
}
CHECKS = tuple(DEFAULT_TOL)


def family_normal_speed(build: Callable[[float], ProfileCurve], p: float, eta: float) -> np.ndarray:
    """Normal component of ``d/dp build(p)`` by central differences, node by node."""
    base = build(p)
    plus, minus = build(p + eta), build(p - eta)
    if plus.M != base.M or minus.M != base.M:
        raise DomainError("family members must share the node count")
    fr = frame(base)
    return ((plus.r - minus.r) * fr.nr + (plus.z - minus.z) * fr.nz) / (2.0 * eta)


def perturbed_family(n: int, theta: float, R: float, mode: int, M: int) -> Callable[[float], ProfileCurve]:
    return lambda eps: make_perturbed_cap(n, theta, R, mode, eps, M)


def cap_family(n: int, theta: float, M: int) -> Callable[[float], ProfileCurve]:
    return lambda R: make_cap(n, theta, R, M)


def check_hm(curve: ProfileCurve, tol: float | None = None) -> VerificationReport:
    tol = DEFAULT_TOL["hm"] if tol is None else tol
    rep = VerificationReport("hsiung_minkowski")
    for k in range(1, curve.n + 1):
        res = hsiung_minkowski_residual(curve, k)
        rep.add(f"hm_k{k}", res, tol, passed=abs(res) < tol, detail="relative residual")
    return rep


def check_hk(curve: ProfileCurve, tol: float | None = None) -> VerificationReport:
    tol = DEFAULT_TOL["hk"] if tol is None else tol
    rep = VerificationReport("heintze_karcher")
    rep.add("hk_value", heintze_karcher_value(curve), tol)
    return rep


def check_horocap(curve: ProfileCurve, tol: float | None = None) -> VerificationReport:
    tol = DEFAULT_TOL["horocap"] if tol is None else tol
    hr = horocap_residual(curve, tol)
    rep = VerificationReport("horocap")
    rep.add("min_rho", hr.min_rho, tol, passed=hr.min_rho > tol)
    rep.add("min_height_slack", hr.min_height_slack, tol, passed=hr.min_height_slack > tol)
    return rep


def check_support(curve: ProfileCurve, tol: float | None = None) -> VerificationReport:
    tol = DEFAULT_TOL["support"] if tol is None else tol
    rep = VerificationReport("support")
    val = support_check(curve)
    rep.add("support_max", val, tol, passed=val <= tol)
    return rep


def check_inequalities(curve: ProfileCurve, tables: dict[int, FkTable],
                       tol: float | None = None) -> VerificationReport:
    tol = DEFAULT_TOL["inequality"] if tol is None else tol
    rep = VerificationReport("inequality")
    for k, table in sorted(tables.items()):
        rep.add(f"margin_k{k}", check_inequality(curve, k, table), tol)
    return rep


def check_variation(curve: ProfileCurve, f: np.ndarray, delta: float = 1e-4,
                    tol: float | None = None) -> VerificationReport:
    """Relative mismatch of the Richardson-extrapolated variation, every k."""
    tol = DEFAULT_TOL["variation"] if tol is None else tol
    rep = VerificationReport("variation")
    for k in range(curve.n + 1):
        v = variation_check_extrapolated(curve, f, k, delta)
        rel = abs(v.residual) / abs(v.predicted) if v.predicted != 0.0 else math.inf
        rep.add(f"variation_k{k}", rel, tol, passed=rel < tol,
                detail=f"fd={v.finite_difference:.12e} predicted={v.predicted:.12e}")
    return rep


def run_check(which: str, curve: ProfileCurve, tol: float | None = None, **kw) -> VerificationReport:
    """Dispatch one named check; failures to evaluate become failed checks."""
    try:
        if which == "hm":
            return check_hm(curve, tol)
        if which == "hk":
            return check_hk(curve, tol)
        if which == "horocap":
            return check_horocap(curve, tol)
        if which == "support":
            return check_support(curve, tol)
        if which == "inequality":
            return check_inequalities(curve, kw["tables"], tol)
        if which == "variation":
            return check_variation(curve, kw["f"], kw.get("delta", 1e-4), tol)
    except CapflowError as exc:
        if isinstance(exc, DomainError):
            raise
        rep = VerificationReport(which)
        rep.add(f"{which}_precondition", math.nan, 0.0, passed=False, detail=str(exc))
        return rep
    raise DomainError(f"unknown check {which!r}")
