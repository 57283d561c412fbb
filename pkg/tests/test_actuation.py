import pytest
from hypothesis import given
from hypothesis import strategies as st

from slackhop.actuation import MotorParams, electrical_power, joint_limit, joint_torque

M = MotorParams()


def test_kt_from_kv_rating():
    assert M.kt == pytest.approx(0.083, abs=5e-4)


def test_joint_torque_examples():
    assert joint_limit(M, "knee") == pytest.approx(1.3 * 5 * 25 / 12)
    assert joint_limit(M, "knee") == pytest.approx(13.54, abs=5e-3)
    assert joint_torque(M, 4.0, "knee") == 4.0
    assert joint_torque(M, 20.0, "knee") == pytest.approx(13.54, abs=5e-3)
    assert joint_torque(M, -20.0, "hip") == pytest.approx(-6.5)
    assert joint_torque(M, 0.0, "hip") == 0.0


def test_unknown_joint():
    with pytest.raises(ValueError):
        joint_limit(M, "ankle")


def test_power_examples():
    assert electrical_power(MotorParams(R=1.0), 0.0, 7.0, "knee") == 0.0
    gear = M.gear_knee
    tau_m = 4.0 / gear
    assert tau_m == pytest.approx(0.384, abs=1e-3)
    R = 0.7
    assert electrical_power(MotorParams(R=R), 4.0, 0.0, "knee") == pytest.approx((tau_m / M.kt) ** 2 * R)
    # tau_m = 0.4 N m, omega_m = 10 rad/s at the motor
    p = electrical_power(MotorParams(R=0.0), 0.4 * gear, 10.0 / gear, "knee")
    assert p == pytest.approx(4.0)


def test_regeneration_switch():
    p_noregen = electrical_power(MotorParams(R=0.0), 1.0, -5.0, "hip")
    p_regen = electrical_power(MotorParams(R=0.0, allow_regen=True), 1.0, -5.0, "hip")
    assert p_noregen == 0.0 and p_regen == pytest.approx(-5.0)


@pytest.mark.parametrize("kw,field", [({"kt": 0.0}, "motor.kt"), ({"R": -1.0}, "motor.R"),
                                      ({"gear_hip": 0.5}, "motor gear")])
def test_validation(kw, field):
    with pytest.raises(ValueError, match=field):
        MotorParams(**kw)


taus = st.floats(-20.0, 20.0)
omegas = st.floats(-50.0, 50.0)
resist = st.floats(0.0, 5.0)


@given(taus, omegas, resist, st.sampled_from(["hip", "knee"]))
def test_power_nonnegative_without_regen(tau, om, R, which):
    assert electrical_power(MotorParams(R=R), tau, om, which) >= 0.0


@given(taus, omegas, resist)
def test_joule_term_even(tau, om, R):
    m = MotorParams(R=R, allow_regen=True)
    diff = electrical_power(m, tau, om, "knee") - electrical_power(m, -tau, om, "knee")
    assert diff == pytest.approx(2 * tau * om, abs=1e-9)


@given(st.lists(st.tuples(taus, omegas), min_size=1, max_size=50), resist)
def test_energy_nondecreasing(samples, R):
    m = MotorParams(R=R)
    e = 0.0
    for tau, om in samples:
        e_new = e + electrical_power(m, tau, om, "hip") * 1e-3
        assert e_new >= e
        e = e_new
