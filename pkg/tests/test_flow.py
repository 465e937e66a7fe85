import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capflow.convexity import horocap_residual
from capflow.corpus import flat_center_profile, relative_to_amplitude, weak_fixtures
from capflow.errors import ConeViolationError, DomainError, FlowBlowUpError
from capflow.flow import (FlowConfig, FlowState, conformal_killing, csv_header, diagnostics, run,
                          speed_locally_constrained, speed_mcf, step)
from capflow.geometry import frame, hausdorff_to_cap, make_cap, make_flat_ball, make_perturbed_cap


def test_conformal_killing_examples():
    np.testing.assert_allclose(conformal_killing([0.0, 1.0]), [0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(conformal_killing([0.0, 0.0]), [0.0, -0.5], atol=1e-15)


@given(st.floats(0.0, 2 * math.pi))
def test_conformal_killing_tangent_to_sphere(phi):
    x = np.array([math.sin(phi), math.cos(phi)])
    assert abs(np.dot(conformal_killing(x), x)) < 1e-14


def test_cap_speed_small(theta):
    for n in (2, 3):
        fr = frame(make_cap(n, theta, 0.9, 400))
        for k in range(1, n + 1):
            assert np.abs(speed_locally_constrained(fr, k)).max() < 1e-4


def test_mcf_speed_examples():
    fr = frame(make_cap(3, 1.0, 0.5, 400))
    np.testing.assert_allclose(speed_mcf(fr), -3 / 0.5, rtol=1e-4)
    assert np.abs(speed_mcf(frame(make_flat_ball(2, 1.0, 50)))).max() < 1e-9


def test_flat_ball_quotient_speed_guard():
    with pytest.raises(ConeViolationError):
        speed_locally_constrained(frame(make_flat_ball(2, 1.0, 50)), 1)


def test_config_validation():
    with pytest.raises(DomainError):
        FlowConfig(kind="willmore")
    with pytest.raises(DomainError):
        FlowConfig(cfl=1.5)
    with pytest.raises(DomainError):
        FlowConfig(t_end=0.0)


def test_csv_header():
    assert csv_header(2) == ["t", "W0", "W1", "W2", "W3", "min_rho", "min_height_slack", "minF",
                             "maxKappa", "angle_defect", "cap_dist", "speed_sup"]


def test_cap_is_fixed_point():
    c = make_cap(2, math.pi / 3, 0.8, 100)
    state = FlowState(0.0, c)
    cfg = FlowConfig(k=1)
    for _ in range(1000):
        state = step(state, cfg)
    fit = hausdorff_to_cap(state.curve)
    assert fit.dist < 1e-6 and abs(fit.R - 0.8) < 1e-6


def test_nan_speed_triggers_halving():
    c = make_perturbed_cap(2, math.pi / 2, 1.0, 1, 0.01, 100)
    cfg = FlowConfig(k=1)
    ref = step(FlowState(0.0, c), cfg)

    def speed(fr, attempt):
        f = speed_locally_constrained(fr, 1)
        if attempt < 3:
            f = f.copy()
            f[40] = np.nan
        return f

    out = step(FlowState(0.0, c), cfg, speed)
    assert out.halvings == 3
    assert out.last_dt == pytest.approx(ref.last_dt / 8)


def test_persistent_failure_blows_up():
    c = make_perturbed_cap(2, math.pi / 2, 1.0, 1, 0.01, 100)
    with pytest.raises(FlowBlowUpError):
        step(FlowState(0.0, c), FlowConfig(k=1), lambda fr, attempt: np.full(101, np.nan))


def test_kernel_matches_reference_step():
    c = make_perturbed_cap(3, math.pi / 3, 0.8, 1, 0.01, 120)
    cfg = FlowConfig(k=2, t_end=1e9, diagnostics_every=50, max_steps=50, resample_every=10 ** 6)
    state = FlowState(0.0, c)
    for _ in range(50):
        state = step(state, cfg)
    res = run(c, cfg, fit_cap=False)
    assert res.final.step_count == 50
    assert res.final.t == pytest.approx(state.t, rel=1e-12)
    assert np.max(np.abs(res.final.curve.r - state.curve.r)) < 1e-13
    assert np.max(np.abs(res.final.curve.z - state.curve.z)) < 1e-13


def test_run_deterministic():
    c = make_perturbed_cap(2, math.pi / 3, 1.0, 1, 0.01, 80)
    cfg = FlowConfig(k=1, t_end=0.05, diagnostics_every=500)
    a = run(c, cfg)
    b = run(c, cfg)
    assert [r.row() for r in a.trajectory] == [r.row() for r in b.trajectory]


def test_flat_init_aborts_with_trajectory():
    with pytest.raises(ConeViolationError) as info:
        run(make_flat_ball(2, 1.0, 60), FlowConfig(k=1, t_end=0.1))
    assert len(info.value.trajectory) == 1


def test_one_step_reduces_cap_distance():
    c = make_perturbed_cap(2, math.pi / 2, 1.0, 1, 0.01, 200)
    before = hausdorff_to_cap(c).dist
    after = step(FlowState(0.0, c), FlowConfig(k=1)).curve
    assert hausdorff_to_cap(after).dist < before


def test_short_run_invariants():
    c = make_perturbed_cap(2, math.pi / 6, 0.8, 2, relative_to_amplitude(math.pi / 6, 0.8, 2, 0.2), 100)
    assert c.meta["horocap_strict"]
    h0 = horocap_residual(c).min_height_slack
    res = run(c, FlowConfig(k=2, t_end=0.3, diagnostics_every=1000))
    for rec in res.trajectory:
        assert rec.angle_defect < 1e-7
        assert rec.min_height_slack >= h0 - 1e-8
        assert rec.min_rho > 0.0


def test_t_marks_force_records():
    c = make_perturbed_cap(2, math.pi / 2, 1.0, 1, 0.01, 60)
    res = run(c, FlowConfig(k=1, t_end=0.02, t_marks=(0.005, 0.01), diagnostics_every=10 ** 6),
              fit_cap=False)
    ts = [r.t for r in res.trajectory]
    assert ts[0] == 0.0 and 0.005 in ts and 0.01 in ts and ts[-1] == pytest.approx(0.02)


def test_mcf_strictifies_weak_fixture():
    c = weak_fixtures(count=1, M=100)[0]
    assert not horocap_residual(c).strict
    res = run(c, FlowConfig(kind="mcf", t_end=1e-3, diagnostics_every=10 ** 6), fit_cap=False)
    assert horocap_residual(res.final.curve).min_rho > 0.0


def test_flat_center_profile_is_flat_inside():
    c = flat_center_profile(2, math.pi / 3, 0.3, 4.0, 4, 200)
    fr = frame(c)
    inner = c.r < 0.2
    assert np.abs(fr.kappa_prof[inner]).max() < 1e-8
    assert np.abs(c.z[inner] - c.z[0]).max() < 1e-14


def test_diagnostics_record_fields():
    c = make_cap(2, 1.0, 1.0, 100)
    rec = diagnostics(FlowState(0.0, c), FlowConfig(k=1))
    assert rec.cap_dist < 1e-10 and rec.cap_R == pytest.approx(1.0, abs=1e-8)
    assert rec.minF == pytest.approx(1.0, abs=1e-4)
    assert rec.starshaped
    assert len(rec.row()) == len(csv_header(2))
