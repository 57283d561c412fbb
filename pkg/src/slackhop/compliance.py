"""Knee spring and slack-tendon damper.

The damper tendon only pulls the piston once the tendon pull-in ``x_d``
exceeds the slack setting.  While engaged the piston follows the tendon and
produces a viscous force plus the force of its internal recovery spring.  The
roller on the piston can only push, so the total force is clamped at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

__all__ = [
    "SpringParams",
    "DamperParams",
    "DamperState",
    "spring_force",
    "damper_force",
    "dissipative_force",
    "update_damper",
]


@dataclass(frozen=True)
class SpringParams:
    k_k: float = 10900.0  # N/m

    def __post_init__(self):
        if not self.k_k > 0.0:
            raise ValueError("spring.k_k must be > 0")


@dataclass(frozen=True)
class DamperParams:
    """Damper law ``F = c * sign(v) * |v|**exponent + k_rec * piston_pos``.

    ``c`` and ``k_rec`` are free constants; see :func:`slackhop.harness.calibrate`.
    """

    c: float = 400.0
    exponent: float = 1.0
    k_rec: float = 1000.0
    slack: float = 0.0

    def __post_init__(self):
        if self.c < 0.0:
            raise ValueError("damper.c must be >= 0")
        if self.k_rec < 0.0:
            raise ValueError("damper.k_rec must be >= 0")
        if self.slack < 0.0:
            raise ValueError("damper.slack must be >= 0")
        if not self.exponent > 0.0:
            raise ValueError("damper.exponent must be > 0")


@dataclass(frozen=True)
class DamperState:
    engaged: bool = False
    piston_pos: float = 0.0
    piston_vel: float = 0.0
    dissipated: float = 0.0


@njit(cache=True)
def _viscous(c, exponent, v):
    if v == 0.0:
        return 0.0
    if exponent == 1.0:
        return c * v
    return math.copysign(c * abs(v) ** exponent, v)


@njit(cache=True)
def _damper_force(c, exponent, k_rec, piston_pos, piston_vel, engaged):
    if not engaged:
        return 0.0
    f = _viscous(c, exponent, piston_vel) + k_rec * piston_pos
    return f if f > 0.0 else 0.0


@njit(cache=True)
def _dissipative_force(c, exponent, k_rec, piston_pos, piston_vel, engaged):
    # Part of the applied force that does not go into the recovery spring.
    # Equals the viscous term except while the push-only clamp is active.
    if not engaged:
        return 0.0
    return _damper_force(c, exponent, k_rec, piston_pos, piston_vel, engaged) - k_rec * piston_pos


def spring_force(p: SpringParams, x_s: float) -> float:
    """Linear tendon spring force [N] for pull-in ``x_s`` [m]."""
    return p.k_k * x_s


def damper_force(p: DamperParams, st: DamperState) -> float:
    """Total damper force [N] for the given piston state."""
    return _damper_force(p.c, p.exponent, p.k_rec, st.piston_pos, st.piston_vel, st.engaged)


def dissipative_force(p: DamperParams, st: DamperState) -> float:
    return _dissipative_force(p.c, p.exponent, p.k_rec, st.piston_pos, st.piston_vel, st.engaged)


def update_damper(p: DamperParams, x_d: float, x_d_vel: float, st: DamperState, dt: float) -> DamperState:
    """Advance the damper to a new tendon pull-in and accumulate dissipation.

    The dissipated-energy ledger is the trapezoidal integral of the
    dissipative force over the piston displacement.  ``dt`` only has to be
    positive; the integral is taken with respect to displacement.
    """
    if not dt > 0.0:
        raise ValueError("dt must be > 0")
    pos = max(0.0, x_d - p.slack)
    engaged = pos > 0.0
    new = DamperState(engaged=engaged, piston_pos=pos, piston_vel=x_d_vel if engaged else 0.0)
    f_old = dissipative_force(p, st)
    f_new = dissipative_force(p, new)
    work = 0.5 * (f_old + f_new) * (pos - st.piston_pos)
    return replace(new, dissipated=st.dissipated + work)
