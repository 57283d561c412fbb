"""Motor torque limits and electrical power model."""
from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

__all__ = ["MotorParams", "joint_torque", "electrical_power", "joint_limit"]

KV_RPM_PER_VOLT = 115.0


@dataclass(frozen=True)
class MotorParams:
    """Hip and knee drive constants.

    ``kt`` follows from the motor's KV rating; ``R`` is a free constant fitted
    by :func:`slackhop.harness.calibrate`.
    """

    kt: float = 60.0 / (2.0 * math.pi * KV_RPM_PER_VOLT)
    R: float = 0.2
    tau_max_motor: float = 1.3
    gear_hip: float = 5.0
    gear_knee: float = 5.0 * 25.0 / 12.0
    allow_regen: bool = False

    def __post_init__(self):
        if not self.kt > 0.0:
            raise ValueError("motor.kt must be > 0")
        if self.R < 0.0:
            raise ValueError("motor.R must be >= 0")
        if self.gear_hip < 1.0 or self.gear_knee < 1.0:
            raise ValueError("motor gear ratios must be >= 1")

    def gear(self, which: str) -> float:
        if which == "hip":
            return self.gear_hip
        if which == "knee":
            return self.gear_knee
        raise ValueError(f"unknown joint {which!r}")


@njit(cache=True)
def _clamp(x, limit):
    if x > limit:
        return limit
    if x < -limit:
        return -limit
    return x


@njit(cache=True)
def _electrical_power(tau_joint, omega_joint, gear, kt, R, allow_regen):
    tau_m = tau_joint / gear
    mech = tau_m * omega_joint * gear
    if not allow_regen and mech < 0.0:
        mech = 0.0
    i = tau_m / kt
    return mech + i * i * R


def joint_limit(p: MotorParams, which: str) -> float:
    return p.tau_max_motor * p.gear(which)


def joint_torque(p: MotorParams, tau_cmd_joint: float, which: str) -> float:
    """Clamp a joint torque command to the rated motor torque times gearing."""
    return _clamp(tau_cmd_joint, joint_limit(p, which))


def electrical_power(p: MotorParams, tau_joint: float, omega_joint: float, which: str) -> float:
    """Electrical input power [W]: mechanical term plus winding Joule loss.

    Without regeneration, negative mechanical power is not recovered.
    """
    return _electrical_power(tau_joint, omega_joint, p.gear(which), p.kt, p.R, p.allow_regen)
