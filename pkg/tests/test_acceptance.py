"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Shared inputs (the perturbed-cap corpus, f_k tables and flow runs) are built
once per module.
"""

import math

import numpy as np
import pytest
from shapely.geometry import LineString

from capflow.convexity import (cap_horocap_residual, equality_tilt, horocap_residual,
                               support_check)
from capflow.corpus import flow_corpus, perturbed_cap_lattice, weak_fixtures
from capflow.flow import FlowConfig, run, speed_locally_constrained
from capflow.geometry import frame, make_cap, make_flat_ball
from capflow.inequalities import (check_inequality, heintze_karcher_value,
                                  hsiung_minkowski_residual, tabulate_fk)
from capflow.quermass import cap_quermass_exact, variation_check_extrapolated
from capflow.verify import cap_family, family_normal_speed, perturbed_family
from conftest import record_criterion

NS = (2, 3)
THETAS = (math.pi / 6, math.pi / 3, math.pi / 2)
RADII = (0.5, 1.0, 2.0)
ROUNDOFF_FLOOR = 5e-9
TOL_CAP = 1e-6


@pytest.fixture(scope="module")
def corpus():
    items = perturbed_cap_lattice(M=400)
    assert len(items) >= 1000
    return items


@pytest.fixture(scope="module")
def tables():
    out = {}
    for n in NS:
        for th in THETAS:
            for k in range(1, n + 1):
                out[n, th, k] = tabulate_fk(n, th, k, audit=True, audit_stride=16)
    return out


@pytest.fixture(scope="module")
def flow_runs():
    runs = []
    for item, k in flow_corpus(M=200):
        res = run(item.curve, FlowConfig(k=k, tol_cap=TOL_CAP))
        runs.append((item, k, res))
    return runs


def test_c01_cap_stationarity():
    worst, orders, cases = 0.0, [], 0
    for n in NS:
        for th in THETAS:
            for R in RADII:
                for k in range(1, n + 1):
                    sup = [np.abs(speed_locally_constrained(frame(make_cap(n, th, R, M)), k)).max()
                           for M in (100, 200, 400, 800)]
                    worst = max(worst, sup[-1])
                    # pairs whose finer value sits above round-off
                    case = [math.log2(a / b) for a, b in zip(sup, sup[1:]) if b > ROUNDOFF_FLOOR]
                    assert case, (n, th, R, k)
                    orders += case
                    cases += 1
    ok = worst < 5e-6 and all(1.8 <= o <= 2.2 for o in orders)
    record_criterion(1, ok, f"max sup|f| at M=800 = {worst:.2e} over {cases} caps; "
                            f"orders in [{min(orders):.3f}, {max(orders):.3f}]")
    assert ok


def test_c02_curvature_oracle():
    worst = 0.0
    for n in NS:
        for th in THETAS:
            for R in RADII:
                fr = frame(make_cap(n, th, R, 800))
                worst = max(worst, np.abs(fr.kappa_prof - 1 / R).max(), np.abs(fr.kappa_rot - 1 / R).max())
    ok = worst < 1e-6
    record_criterion(2, ok, f"max |kappa - 1/R| at M=800 = {worst:.2e}")
    assert ok


def test_c03_hsiung_minkowski(corpus):
    caps = 0.0
    for n in NS:
        for th in THETAS:
            for R in RADII:
                c = make_cap(n, th, R, 800)
                caps = max(caps, max(abs(hsiung_minkowski_residual(c, k)) for k in range(1, n + 1)))
    corp = max(abs(hsiung_minkowski_residual(it.curve, k))
               for it in corpus for k in range(1, it.n + 1))
    ok = caps < 1e-5 and corp < 1e-4
    record_criterion(3, ok, f"caps max {caps:.2e}; corpus ({len(corpus)} surfaces) max {corp:.2e}")
    assert ok


def test_c04_variation_formula():
    worst, count = 0.0, 0
    for n in NS:
        for th in THETAS:
            families = [(perturbed_family(n, th, 1.0, 1, 800), 0.002),
                        (cap_family(n, th, 800), 0.8)]
            for build, p in families:
                curve = build(p)
                f = family_normal_speed(build, p, 1e-4)
                for k in range(n + 1):
                    v = variation_check_extrapolated(curve, f, k, 1e-4)
                    worst = max(worst, abs(v.residual) / abs(v.predicted))
                    count += 1
    ok = worst < 1e-3
    record_criterion(4, ok, f"max relative residual {worst:.2e} over {count} (family, k) checks")
    assert ok


def _per_step_drop(traj, j):
    drops = [(a.W[j] - b.W[j]) / (b.step - a.step) for a, b in zip(traj, traj[1:]) if b.step > a.step]
    return max(drops)


def test_c05_conservation_monotonicity(flow_runs):
    cons, drop = 0.0, -math.inf
    for item, k, res in flow_runs:
        tr = res.trajectory
        w0 = tr[0].W[k]
        cons = max(cons, max(abs(r.W[k] - w0) for r in tr) / abs(w0))
        drop = max(drop, _per_step_drop(tr, k - 1))
    ok = cons < 1e-4 and drop < 1e-9
    record_criterion(5, ok, f"max |dW_k|/W_k = {cons:.2e}; max per-step decrease of W_(k-1) = {drop:.2e} "
                            f"({len(flow_runs)} runs)")
    assert ok


def test_c06_convergence(flow_runs):
    dist, lim = 0.0, 0.0
    for item, k, res in flow_runs:
        assert res.converged, item.label
        dist = max(dist, res.trajectory[-1].cap_dist)
        w0 = res.trajectory[0].W[k]
        w_cap = cap_quermass_exact(item.n, item.theta, res.limit_radius).W[k]
        lim = max(lim, abs(w_cap - w0) / abs(w0))
    ok = dist < 1e-5 and lim < 1e-4
    record_criterion(6, ok, f"max final cap distance {dist:.2e}; limit-cap W_k mismatch {lim:.2e}")
    assert ok


def test_c07_horocap_preserved(flow_runs):
    lowest = min(r.min_rho for _, _, res in flow_runs for r in res.trajectory)
    records = sum(len(res.trajectory) for _, _, res in flow_runs)
    ok = lowest > 0.0
    record_criterion(7, ok, f"min rho over {records} records = {lowest:.3e}")
    assert ok


def test_c08_inequality(corpus, tables):
    worst = math.inf
    for it in corpus:
        for k in range(1, it.n + 1):
            worst = min(worst, check_inequality(it.curve, k, tables[it.n, it.theta, k]))
    cap_dev, flat_dev, audit = 0.0, 0.0, 0.0
    for (n, th, k), t in tables.items():
        audit = max(audit, t.audit_deviation)
        for R in RADII:
            cap_dev = max(cap_dev, abs(check_inequality(make_cap(n, th, R, 800), k, t)))
        flat_dev = max(flat_dev, abs(check_inequality(make_flat_ball(n, th, 400), k, t)))
    ok = worst >= -1e-6 and cap_dev <= 1e-7 and flat_dev <= 1e-9
    record_criterion(8, ok, f"corpus min margin {worst:.2e}; caps |margin| <= {cap_dev:.2e}; "
                            f"flat |margin| <= {flat_dev:.2e}; table audit {audit:.1e}")
    assert ok


def test_c09_tilted_cap_equality():
    rng = np.random.default_rng(2024)
    thetas = rng.uniform(0.01, math.pi / 2, 100)
    radii = np.exp(rng.uniform(math.log(0.01), math.log(100.0), 100))
    worst = max(abs(cap_horocap_residual(th, R, equality_tilt(th, R))) for th, R in zip(thetas, radii))
    ok = worst <= 1e-12
    record_criterion(9, ok, f"max |rho| at the equality tilt over 100 (theta, R) = {worst:.2e}")
    assert ok


def test_c10_support(corpus):
    worst = max(support_check(it.curve) for it in corpus)
    ok = worst <= 1e-8
    record_criterion(10, ok, f"max <x - cos(theta) e, nu> over the corpus = {worst:.2e}")
    assert ok


def test_c11_mcf_strictification():
    fixtures = weak_fixtures(count=20, M=200)
    assert len(fixtures) == 20
    T = 0.01
    marks = (T / 16, T / 8, T / 4, T / 2)
    rho_min, spread_max, slope_min = math.inf, 0.0, math.inf
    for c in fixtures:
        assert horocap_residual(c).min_rho <= 1e-10
        snaps = {}
        res = run(c, FlowConfig(kind="mcf", t_end=T, t_marks=marks, diagnostics_every=10 ** 9),
                  fit_cap=False, on_record=lambda rec, st: snaps.__setitem__(st.t, st.curve))
        rho_min = min(rho_min, horocap_residual(res.final.curve).min_rho)
        base = LineString(np.column_stack([c.r, c.z]))
        ts = sorted(t for t in snaps if t > 0.0)
        d = np.array([base.hausdorff_distance(LineString(np.column_stack([snaps[t].r, snaps[t].z])))
                      for t in ts])
        ratio = d / np.array(ts)
        spread_max = max(spread_max, ratio.max() / ratio.min())
        slope_min = min(slope_min, math.log(d[1] / d[0]) / math.log(ts[1] / ts[0]))
    ok = rho_min > 0.0 and spread_max <= 1.5 and slope_min >= 0.85
    record_criterion(11, ok, f"min rho at t={T} is {rho_min:.2e}; max spread of dist/t {spread_max:.3f}; "
                             f"smallest-horizon slope >= {slope_min:.3f} (20 fixtures)")
    assert ok


def test_c12_speed_decay_estimate():
    members = [flow_corpus(M=200)[i] for i in (0, 1, 3, 5)]
    worst = 0.0
    detail = []
    for item, k in members:
        est = []
        for M in (200, 400, 800):
            cfg = FlowConfig(k=k, cfl=0.4, t_end=1.0, M=M, diagnostics_every=10 ** 9)
            est.append(run(item.curve, cfg, fit_cap=False).final.est_sup)
        assert all(math.isfinite(e) and e > 0.0 for e in est)
        var = (max(est) - min(est)) / min(est)
        worst = max(worst, var)
        detail.append(f"{est[-1]:.4f}")
    ok = worst < 0.2
    record_criterion(12, ok, f"sup t/minF^2 on (0,1] = [{', '.join(detail)}]; "
                             f"max variation over M in (200,400,800) {worst:.2e}")
    assert ok


def test_c13_heintze_karcher(corpus):
    lowest = min(heintze_karcher_value(it.curve) for it in corpus)
    caps = max(abs(heintze_karcher_value(make_cap(n, th, R, 800)))
               for n in NS for th in THETAS for R in RADII)
    ok = lowest >= -1e-6 and caps <= 1e-6
    record_criterion(13, ok, f"corpus min {lowest:.2e}; caps max |value| {caps:.2e}")
    assert ok
