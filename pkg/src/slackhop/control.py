"""Feed-forward controllers.

Vertical hopping uses a square-wave knee torque at a fixed frequency.  Forward
hopping adds a hip angle pattern driven by a linearly progressing oscillator
phase that is warped piecewise-linearly so the swing half-cycle occupies the
fraction ``D_vir`` of the period.  Neither controller sees contact or terrain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from numba import njit

from .actuation import MotorParams, joint_torque

__all__ = [
    "VerticalSchedule",
    "CpgParams",
    "CpgState",
    "warp_phase",
    "hip_reference",
    "knee_schedule",
    "hip_pd",
    "cpg_state",
    "critical_gains",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VerticalSchedule:
    f_v: float = 2.2
    tau_v: float = 4.0
    duty: float = 0.22
    phase0: float = 0.55

    def __post_init__(self):
        if not self.f_v > 0.0:
            raise ValueError("controller.f_v must be > 0")
        if not 0.0 < self.duty < 1.0:
            raise ValueError("controller.duty must lie in (0, 1)")
        if self.tau_v < 0.0:
            raise ValueError("controller.tau_v must be >= 0")

    # square-wave view shared with the CPG knee pattern
    @property
    def frequency(self):
        return self.f_v

    @property
    def amplitude(self):
        return self.tau_v

    @property
    def phase_shift(self):
        return 0.0

    @property
    def pulse_duty(self):
        return self.duty


def critical_gains(inertia: float, bandwidth_hz: float) -> tuple[float, float]:
    """PD gains placing a unit-damped pole pair at ``bandwidth_hz`` for ``inertia``."""
    wn = TWO_PI * bandwidth_hz
    kp = inertia * wn * wn
    return kp, 2.0 * math.sqrt(kp * inertia)


_KP, _KD = critical_gains(0.005, 12.0)


@dataclass(frozen=True)
class CpgParams:
    A_hip: float = math.radians(18.0)
    O_hip: float = math.radians(2.0)
    f_f: float = 1.85
    D_vir: float = 0.4
    tau_f: float = 1.3
    knee_phase_shift: float = 0.75
    knee_duty: float = 0.2
    kp: float = _KP
    kd: float = _KD
    swing_inertia: float = 0.005
    phase0: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.D_vir < 1.0:
            raise ValueError("controller.D_vir must lie in (0, 1)")
        if self.A_hip < 0.0:
            raise ValueError("controller.A_hip must be >= 0")
        if not self.f_f > 0.0:
            raise ValueError("controller.f_f must be > 0")
        if not 0.0 < self.knee_duty < 1.0:
            raise ValueError("controller.knee_duty must lie in (0, 1)")

    @property
    def frequency(self):
        return self.f_f

    @property
    def amplitude(self):
        return self.tau_f

    @property
    def phase_shift(self):
        return self.knee_phase_shift

    @property
    def pulse_duty(self):
        return self.knee_duty


@dataclass(frozen=True)
class CpgState:
    phi: float
    Phi: float


# -- scalar kernels -----------------------------------------------------------

@njit(cache=True)
def _warp(phi, d_vir):
    if phi < TWO_PI * d_vir:
        return phi / (2.0 * d_vir)
    return (phi + TWO_PI * (1.0 - 2.0 * d_vir)) / (2.0 * (1.0 - d_vir))


@njit(cache=True)
def _warp_slope(phi, d_vir):
    if phi < TWO_PI * d_vir:
        return 1.0 / (2.0 * d_vir)
    return 1.0 / (2.0 * (1.0 - d_vir))


@njit(cache=True)
def _osc_phase(t, freq, phase0):
    frac = freq * t + phase0
    frac -= math.floor(frac)
    return TWO_PI * frac


@njit(cache=True)
def _hip_ref(t, amp, offset, freq, d_vir, phase0):
    """Hip reference angle, rate and acceleration at time ``t``."""
    phi = _osc_phase(t, freq, phase0)
    big = _warp(phi, d_vir)
    rate = _warp_slope(phi, d_vir) * TWO_PI * freq
    c = math.cos(big)
    s = math.sin(big)
    return amp * c + offset, -amp * s * rate, -amp * c * rate * rate


@njit(cache=True)
def _pulse_on(t, freq, phase0, shift, duty):
    frac = freq * t + phase0 - shift
    frac -= math.floor(frac)
    return frac < duty


@njit(cache=True)
def _next_switch(t, freq, phase0, shift, duty):
    """Earliest time strictly after ``t`` at which the pulse toggles."""
    u = freq * t + phase0 - shift
    base = math.floor(u)
    best = math.inf
    for k in range(2):
        for edge in (0.0, duty):
            cand = (base + k + edge - phase0 + shift) / freq
            if cand > t * (1.0 + 1e-15) + 1e-12 and cand < best:
                best = cand
    return best


@njit(cache=True)
def _pd(kp, kd, ref, x, ref_dot, x_dot):
    return kp * (ref - x) + kd * (ref_dot - x_dot)


# -- public API ---------------------------------------------------------------

def warp_phase(p: CpgParams, phi: float) -> float:
    """Map the linear oscillator phase onto the warped hip phase."""
    return _warp(phi, p.D_vir)


def hip_reference(p: CpgParams, Phi: float) -> float:
    return p.A_hip * math.cos(Phi) + p.O_hip


def cpg_state(p: CpgParams, t: float) -> CpgState:
    phi = _osc_phase(t, p.f_f, p.phase0)
    return CpgState(phi=phi, Phi=_warp(phi, p.D_vir))


def knee_schedule(params: Union[VerticalSchedule, CpgParams], t: float) -> float:
    """Square-wave knee torque: on for ``duty`` of each cycle after ``phase_shift``."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    phase0 = params.phase0
    on = _pulse_on(t, params.frequency, phase0, params.phase_shift, params.pulse_duty)
    return params.amplitude if on else 0.0


def hip_pd(kp, kd, theta_ref, theta, theta_dot_ref, theta_dot, motor: MotorParams | None = None):
    """Hip PD torque, clamped to the hip drive limit of ``motor``."""
    tau = _pd(kp, kd, theta_ref, theta, theta_dot_ref, theta_dot)
    return joint_torque(motor or MotorParams(), tau, "hip")
