import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from slackhop.control import (
    CpgParams,
    VerticalSchedule,
    cpg_state,
    critical_gains,
    hip_pd,
    hip_reference,
    knee_schedule,
    warp_phase,
)

TWO_PI = 2 * math.pi
P = CpgParams()


def test_warp_examples():
    assert warp_phase(P, 0.0) == 0.0
    phi = TWO_PI * 0.4
    first = phi / (2 * 0.4)
    second = (phi + TWO_PI * (1 - 2 * 0.4)) / (2 * (1 - 0.4))
    assert abs(first - math.pi) < 1e-12 and abs(second - math.pi) < 1e-12
    assert abs(warp_phase(P, phi) - math.pi) < 1e-12
    below = np.nextafter(TWO_PI, 0.0)
    assert TWO_PI - 1e-12 < warp_phase(P, below) < TWO_PI


def test_warp_identity_at_half():
    p = CpgParams(D_vir=0.5)
    for phi in np.linspace(0.0, TWO_PI, 1001, endpoint=False):
        assert warp_phase(p, phi) == pytest.approx(phi, abs=1e-12)


def test_warp_strictly_increasing_dense_grid():
    phi = np.linspace(0.0, TWO_PI, 10_000, endpoint=False)
    w = np.array([warp_phase(P, x) for x in phi])
    assert np.all(np.diff(w) > 0.0)


@given(st.floats(0.05, 0.95), st.floats(0.0, TWO_PI, exclude_max=True))
def test_warp_slopes_and_range(d, phi):
    p = CpgParams(D_vir=d)
    out = warp_phase(p, phi)
    assert 0.0 <= out < TWO_PI + 1e-12
    h = 1e-7
    if abs(phi - TWO_PI * d) > 1e-5 and h < phi < TWO_PI - h:
        slope = (warp_phase(p, phi + h) - warp_phase(p, phi - h)) / (2 * h)
        expect = 1 / (2 * d) if phi < TWO_PI * d else 1 / (2 * (1 - d))
        assert slope == pytest.approx(expect, rel=1e-5)


@given(st.floats(0.05, 0.95))
def test_forward_half_cycle_fraction(d):
    p = CpgParams(D_vir=d)
    t = np.linspace(0.0, 1.0 / p.f_f, 20_001, endpoint=False)
    big = np.array([cpg_state(p, x).Phi for x in t])
    assert np.mean(big < math.pi) == pytest.approx(d, abs=2e-4)


def test_hip_reference_examples():
    assert math.degrees(hip_reference(P, 0.0)) == pytest.approx(20.0)
    assert math.degrees(hip_reference(P, math.pi)) == pytest.approx(-16.0)
    flat = CpgParams(A_hip=0.0)
    for big in np.linspace(0, TWO_PI, 17):
        assert hip_reference(flat, big) == pytest.approx(flat.O_hip)


def test_knee_schedule_examples():
    p = CpgParams(phase0=0.0)
    t_mid = (p.knee_phase_shift + p.knee_duty / 2) / p.f_f
    assert knee_schedule(p, t_mid) == p.tau_f
    t_before = (p.knee_phase_shift - 1e-6) / p.f_f
    assert knee_schedule(p, t_before) == 0.0
    v = VerticalSchedule(phase0=0.0)
    t = np.arange(0.0, 1.0 / v.f_v, 1e-5)
    on = np.array([knee_schedule(v, x) > 0 for x in t])
    assert on.sum() * 1e-5 == pytest.approx(0.100, abs=2e-4)
    assert 1.0 / v.f_v == pytest.approx(0.4545, abs=1e-4)


def test_knee_schedule_wraps():
    p = CpgParams(phase0=0.0, knee_phase_shift=0.9, knee_duty=0.2)
    assert knee_schedule(p, 0.05 / p.f_f) == p.tau_f
    with pytest.raises(ValueError):
        knee_schedule(p, -1.0)


def test_hip_pd_examples():
    assert hip_pd(20.0, 0.5, 0.3, 0.3, 1.0, 1.0) == 0.0
    assert hip_pd(3.0, 0.0, 1.0, 0.0, 0.0, 0.0) == pytest.approx(3.0)
    assert hip_pd(100.0, 0.0, 1.0, 0.0, 0.0, 0.0) == pytest.approx(6.5)


def test_critically_damped_unit_inertia_no_overshoot():
    kp = 40.0
    kd = 2 * math.sqrt(kp)

    def rhs(t, s):
        return [s[1], hip_pd(kp, kd, 1.0, s[0], 0.0, s[1])]

    sol = solve_ivp(rhs, (0.0, 5.0), [0.0, 0.0], max_step=1e-3, rtol=1e-10, atol=1e-12)
    assert sol.y[0].max() <= 1.0 + 1e-9
    assert sol.y[0, -1] == pytest.approx(1.0, abs=1e-4)


def test_critical_gains_rule():
    kp, kd = critical_gains(0.005, 12.0)
    assert kp == pytest.approx(0.005 * (TWO_PI * 12) ** 2)
    assert kd == pytest.approx(2 * math.sqrt(kp * 0.005))
    assert (P.kp, P.kd) == (kp, kd)


@pytest.mark.parametrize("kw,field", [({"D_vir": 1.0}, "D_vir"), ({"A_hip": -0.1}, "A_hip"),
                                      ({"f_f": 0.0}, "f_f"), ({"knee_duty": 0.0}, "knee_duty")])
def test_cpg_validation(kw, field):
    with pytest.raises(ValueError, match=field):
        CpgParams(**kw)


@pytest.mark.parametrize("kw,field", [({"f_v": 0.0}, "f_v"), ({"duty": 1.0}, "duty"),
                                      ({"tau_v": -1.0}, "tau_v")])
def test_vertical_validation(kw, field):
    with pytest.raises(ValueError, match=field):
        VerticalSchedule(**kw)
