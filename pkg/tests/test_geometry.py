import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capflow.errors import DegenerateCurveError, DomainError
from capflow.geometry import (CapSpec, ProfileCurve, cap_angles, cap_center_distance, contact_angle,
                              frame, hausdorff_to_cap, make_cap, make_flat_ball, make_perturbed_cap,
                              resample, validate)

thetas = st.floats(0.05, math.pi / 2)
radii = st.floats(0.2, 20.0)


def test_free_boundary_unit_cap():
    c = make_cap(2, math.pi / 2, 1.0, 200)
    assert c.z[0] == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert c.z[-1] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert cap_center_distance(math.pi / 2, 1.0) == pytest.approx(math.sqrt(2))


@given(thetas, radii)
def test_cap_boundary_height(theta, R):
    d = cap_center_distance(theta, R)
    beta, alpha = cap_angles(theta, R)
    assert math.cos(alpha) == pytest.approx((1 + R * math.cos(theta)) / d, abs=1e-14)
    assert d - R * math.cos(beta) == pytest.approx(math.cos(alpha), abs=1e-13)


@given(thetas, radii)
def test_cap_contact_angle(theta, R):
    assert contact_angle(make_cap(2, theta, R, 200)) == pytest.approx(theta, abs=1e-8)


def test_cap_spec_center():
    assert CapSpec(math.pi / 3, 0.5).center_distance > 1.0


def test_flat_ball(theta):
    c = make_flat_ball(3, theta, 64)
    fr = frame(c)
    assert np.abs(fr.kappa_prof).max() < 1e-9 and np.abs(fr.kappa_rot).max() < 1e-9
    np.testing.assert_allclose(fr.normal, np.tile([0.0, -1.0], (65, 1)), atol=1e-12)
    assert contact_angle(c) == pytest.approx(theta, abs=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        make_cap(2, 2.0, 1.0)
    with pytest.raises(DomainError):
        make_cap(2, 1.0, -1.0)
    with pytest.raises(DomainError):
        make_cap(2, 1.0, 1.0, M=8)
    with pytest.raises(DomainError):
        make_flat_ball(2, 0.0)


def test_frame_orientation_on_cap():
    c = make_cap(2, math.pi / 3, 0.7, 400)
    fr = frame(c)
    np.testing.assert_allclose(fr.normal[0], [0.0, -1.0], atol=1e-14)
    assert np.allclose(np.linalg.norm(fr.tangent, axis=1), 1.0, atol=1e-10)
    assert np.allclose(np.sum(fr.tangent * fr.normal, axis=1), 0.0, atol=1e-10)
    x_nu = c.r[-1] * fr.nr[-1] + c.z[-1] * fr.nz[-1]
    assert x_nu == pytest.approx(-math.cos(c.theta), abs=1e-8)


def test_frame_curvature_order():
    errs = []
    Ms = (100, 200, 400, 800)
    for M in Ms:
        fr = frame(make_cap(2, math.pi / 3, 0.7, M))
        errs.append(max(np.abs(fr.kappa_prof - 1 / 0.7).max(), np.abs(fr.kappa_rot - 1 / 0.7).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2)), orders


def test_axis_regularity():
    diffs = []
    for M in (100, 200, 400):
        c = make_perturbed_cap(2, math.pi / 2, 1.0, 1, 0.02, M)
        fr = frame(c)
        diffs.append(abs(fr.kappa_rot[0] - fr.kappa_prof[0]))
        # axis value against the interior limit
        diffs[-1] = max(diffs[-1], abs(fr.kappa_rot[1] - fr.kappa_prof[0]))
    assert diffs[2] < diffs[0] / 2


def test_degenerate_nodes():
    c = make_cap(2, 1.0, 1.0, 32)
    r, z = c.r.copy(), c.z.copy()
    r[5], z[5] = r[4], z[4]
    with pytest.raises(DegenerateCurveError):
        frame(ProfileCurve(2, 1.0, r, z))


def test_validate_reports_slack():
    c = make_cap(2, 1.0, 1.0, 64)
    assert validate(c).passed
    r, z = c.r.copy(), c.z.copy()
    rho = math.hypot(r[30], z[30])
    r[30] *= (1.0 + 1e-3) / rho
    z[30] *= (1.0 + 1e-3) / rho
    rep = validate(ProfileCurve(2, 1.0, r, z))
    assert not rep["inside_ball"].passed
    assert rep["inside_ball"].value == pytest.approx(-1e-3, rel=1e-6)
    r, z = c.r.copy(), c.z.copy()
    r[[20, 21]] = r[[21, 20]]
    z[[20, 21]] = z[[21, 20]]
    assert not validate(ProfileCurve(2, 1.0, r, z))["simple"].passed


def test_perturbed_cap_zero_amplitude_is_cap():
    a = make_perturbed_cap(3, math.pi / 3, 0.5, 2, 0.0, 100)
    b = make_cap(3, math.pi / 3, 0.5, 100)
    assert np.array_equal(a.r, b.r) and np.array_equal(a.z, b.z)


def test_perturbed_cap_contract():
    c = make_perturbed_cap(2, math.pi / 3, 0.5, 1, 0.005, 400)
    assert c.meta["horocap_strict"]
    assert contact_angle(c) == pytest.approx(math.pi / 3, abs=1e-8)
    assert validate(c).passed
    big = make_perturbed_cap(2, math.pi / 2, 1.0, 2, 0.02, 400)
    assert not big.meta["horocap_strict"]


def test_resample():
    errs = [np.abs(frame(resample(make_cap(2, math.pi / 3, 0.7, M), 2 * M)).kappa_prof - 1 / 0.7).max()
            for M in (100, 200, 400)]
    assert all(3.0 < a / b < 5.0 for a, b in zip(errs, errs[1:]))
    once = resample(make_perturbed_cap(2, 1.0, 1.0, 1, 0.01, 200))
    twice = resample(once)
    assert np.max(np.abs(once.r - twice.r)) < 1e-10 and np.max(np.abs(once.z - twice.z)) < 1e-10
    flat = resample(make_flat_ball(2, 1.0, 50), 77)
    assert np.max(np.abs(flat.z - math.cos(1.0))) < 1e-12


def test_hausdorff():
    fit = hausdorff_to_cap(make_cap(2, 1.0, 0.8, 400))
    assert fit.R == pytest.approx(0.8, abs=1e-6) and fit.dist < 1e-8
    eps = 0.01
    fit = hausdorff_to_cap(make_perturbed_cap(2, math.pi / 2, 1.0, 1, eps, 400))
    assert 0.0 < fit.dist <= 2 * eps
    # the flat ball is the R -> inf limit: best fit pinned at the bracket end
    flat = hausdorff_to_cap(make_flat_ball(2, 1.0, 100))
    assert flat.R > 900.0 and flat.dist > 1e-4
