import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capflow.convexity import (cap_horocap_residual, equality_tilt, horocap_eigenvalues,
                               horocap_residual, support_check, support_values)
from capflow.errors import DomainError, PreconditionError
from capflow.geometry import frame, make_cap, make_flat_ball, make_perturbed_cap

thetas = st.floats(0.05, math.pi / 2)
radii = st.floats(0.05, 50.0)


def test_aligned_cap_value():
    rep = horocap_residual(make_cap(2, math.pi / 2, 1.0, 400))
    assert rep.min_rho == pytest.approx(math.sqrt(2) - 1, abs=1e-6)
    assert rep.strict


@given(thetas, st.floats(0.3, 5.0))
def test_cap_residual_matches_discrete(theta, R):
    rep = horocap_residual(make_cap(2, theta, R, 800))
    assert rep.min_rho == pytest.approx(cap_horocap_residual(theta, R), abs=1e-8 + 1e-6 / R)


def test_flat_ball_is_weak(theta):
    rep = horocap_residual(make_flat_ball(2, theta, 100))
    assert abs(rep.min_rho) < 1e-12 and abs(rep.min_height_slack) < 1e-15
    assert rep.weak and not rep.strict


def test_large_perturbation_detected():
    assert horocap_residual(make_perturbed_cap(2, math.pi / 2, 1.0, 2, 0.05, 400)).min_rho < 0.0


def test_eigenvalues_against_matrix():
    c = make_perturbed_cap(3, math.pi / 3, 0.8, 1, 0.005, 200)
    fr = frame(c)
    rp, rr = horocap_eigenvalues(fr, c.theta)
    phi = fr.z - math.cos(c.theta)
    psi = 1.0 + fr.nz
    for j in (3, 50, 120, 199):
        h = np.diag([fr.kappa_prof[j], fr.kappa_rot[j], fr.kappa_rot[j]])
        ev = np.sort(np.linalg.eigvalsh(phi[j] * h - psi[j] * np.eye(3)))
        np.testing.assert_allclose(ev, np.sort([rp[j], rr[j], rr[j]]), atol=1e-12)


@given(thetas, radii)
def test_equality_tilt(theta, R):
    assert abs(cap_horocap_residual(theta, R, equality_tilt(theta, R))) <= 1e-12


@given(thetas, radii, st.floats(0.0, 1.5), st.floats(1e-3, 0.07))
def test_residual_decreasing_in_tilt(theta, R, g, dg):
    assert cap_horocap_residual(theta, R, g + dg) < cap_horocap_residual(theta, R, g)


def test_tilt_domain():
    with pytest.raises(DomainError):
        cap_horocap_residual(1.0, 1.0, math.pi / 2)


def test_support_on_caps_and_flat(theta):
    c = make_cap(2, theta, 0.9, 400)
    assert support_check(c) <= 1e-8
    vals = support_values(c)
    # <x, nu> = -cos(theta) on the boundary
    assert vals[-1] == pytest.approx(-math.cos(theta) * (1.0 + frame(c).nz[-1]), abs=1e-8)
    assert np.max(np.abs(support_values(make_flat_ball(2, theta, 50)))) < 1e-15


def test_support_precondition():
    with pytest.raises(PreconditionError):
        support_check(make_perturbed_cap(2, math.pi / 2, 1.0, 3, 0.05, 200))
