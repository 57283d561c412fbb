import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slackhop.kinematics import (
    KinematicsError,
    LegGeometry,
    alpha_of_length,
    knee_torque_to_axial_force,
    leg_jacobian,
    leg_length,
    tendon_excursion,
)

GEOM = LegGeometry()
angles = st.floats(min_value=1e-3, max_value=math.pi - 1e-3)


def test_effective_length_matches_rest_pose():
    assert GEOM.l_eff == pytest.approx(0.2023, abs=5e-5)
    assert abs(leg_length(GEOM, GEOM.alpha0) - GEOM.l0) < 1e-12


def test_leg_length_examples():
    assert leg_length(GEOM, 1.745) == pytest.approx(0.310, abs=1e-4)
    # oracle: 2 * 0.2023 * sin(45 deg)
    assert leg_length(GEOM, math.radians(90.0)) == pytest.approx(2 * 0.2023 * math.sin(math.pi / 4), abs=1e-4)
    assert leg_length(GEOM, math.radians(90.0)) == pytest.approx(0.2861, abs=1e-4)


@pytest.mark.parametrize("alpha", [0.0, -0.1, math.pi, 4.0])
def test_leg_length_domain(alpha):
    with pytest.raises(KinematicsError):
        leg_length(GEOM, alpha)
    with pytest.raises(KinematicsError):
        leg_jacobian(GEOM, alpha)


def test_jacobian_examples():
    assert leg_jacobian(GEOM, math.radians(100.0)) == pytest.approx(0.2023 * math.cos(math.radians(50.0)), abs=1e-4)
    assert leg_jacobian(GEOM, math.radians(100.0)) == pytest.approx(0.1300, abs=1e-4)
    assert 0.0 < leg_jacobian(GEOM, math.pi - 1e-9) < 1e-8


def test_jacobian_matches_central_difference_on_grid():
    h = 1e-6
    for a in np.linspace(0.01, math.pi - 0.01, 1000):
        fd = (leg_length(GEOM, a + h) - leg_length(GEOM, a - h)) / (2 * h)
        jac = leg_jacobian(GEOM, a)
        assert abs(fd - jac) <= 1e-8 * max(1.0, abs(jac)) + 1e-9


def test_tendon_excursion_examples():
    assert tendon_excursion(0.020, GEOM.alpha0, GEOM.alpha0) == 0.0
    x = tendon_excursion(0.020, GEOM.alpha0 - math.radians(10.0), GEOM.alpha0)
    assert x == pytest.approx(0.020 * 10 * math.pi / 180)
    assert x * 1e3 == pytest.approx(3.49, abs=5e-3)
    assert tendon_excursion(0.020, GEOM.alpha0 + 0.1, GEOM.alpha0) == 0.0


def test_axial_force_examples():
    a = math.radians(100.0)
    assert knee_torque_to_axial_force(GEOM, a, 0.0) == 0.0
    assert knee_torque_to_axial_force(GEOM, a, 1.3) == pytest.approx(1.3 / leg_jacobian(GEOM, a))
    assert knee_torque_to_axial_force(GEOM, a, 1.3) == pytest.approx(10.0, abs=0.05)
    assert knee_torque_to_axial_force(GEOM, a, 4.0) == pytest.approx(30.8, abs=0.05)


def test_axial_force_singularity():
    with pytest.raises(KinematicsError):
        knee_torque_to_axial_force(GEOM, math.pi - 1e-12, 1.0)


def test_invalid_geometry_names_field():
    with pytest.raises(KinematicsError, match="geometry.r_k"):
        LegGeometry(r_k=0.0)
    with pytest.raises(KinematicsError, match="geometry.alpha0"):
        LegGeometry(alpha0=math.pi)


@given(angles, angles)
def test_leg_length_monotone(a1, a2):
    if a1 == a2:
        return
    lo, hi = sorted((a1, a2))
    assert leg_length(GEOM, lo) < leg_length(GEOM, hi)


@given(angles)
def test_alpha_round_trip(a):
    assert alpha_of_length(GEOM, leg_length(GEOM, a)) == pytest.approx(a, abs=1e-10)


@given(st.floats(1e-3, 0.1), st.floats(1e-3, 0.1), st.floats(0.0, 1.5))
def test_excursion_linear_on_unclamped_branch(r1, r2, d):
    a0 = GEOM.alpha0
    x1 = tendon_excursion(r1, a0 - d, a0)
    x2 = tendon_excursion(r2, a0 - d, a0)
    assert x1 * r2 == pytest.approx(x2 * r1, rel=1e-12, abs=1e-15)
    assert tendon_excursion(r1, a0 - 2 * d, a0) == pytest.approx(2 * x1, rel=1e-12, abs=1e-15)
