"""Virtual-leg kinematics of the pantograph leg.

The three-segment leg is reduced to a symmetric two-segment virtual leg whose
length depends only on the knee angle::

    l(alpha) = 2 * l_eff * sin(alpha / 2)

``l_eff`` is chosen so that the resting knee angle reproduces the resting leg
length exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from numba import njit

__all__ = [
    "LegGeometry",
    "KinematicsError",
    "leg_length",
    "leg_jacobian",
    "alpha_of_length",
    "tendon_excursion",
    "knee_torque_to_axial_force",
]

JACOBIAN_MIN = 1e-9


class KinematicsError(ValueError):
    """Raised for knee angles outside (0, pi) or singular leg configurations."""


@dataclass(frozen=True)
class LegGeometry:
    """Leg design parameters (lengths in m, angles in rad)."""

    l0: float = 0.310
    l1: float = 0.150
    l2: float = 0.150
    l3: float = 0.150
    r_k: float = 0.030
    r_d: float = 0.020
    r_pk: float = 0.032  # housed only, the bi-articular link is rigid
    alpha0: float = math.radians(100.0)
    l_eff: float = field(init=False)

    def __post_init__(self):
        for name in ("l0", "l1", "l2", "l3", "r_k", "r_d", "r_pk"):
            if not getattr(self, name) > 0.0:
                raise KinematicsError(f"geometry.{name} must be > 0")
        if not 0.0 < self.alpha0 < math.pi:
            raise KinematicsError("geometry.alpha0 must lie in (0, pi)")
        object.__setattr__(self, "l_eff", self.l0 / (2.0 * math.sin(0.5 * self.alpha0)))


# -- scalar kernels shared with the integrator -------------------------------

@njit(cache=True)
def _leg_length(l_eff, alpha):
    return 2.0 * l_eff * math.sin(0.5 * alpha)


@njit(cache=True)
def _leg_jacobian(l_eff, alpha):
    return l_eff * math.cos(0.5 * alpha)


@njit(cache=True)
def _alpha_of_length(l_eff, length):
    s = length / (2.0 * l_eff)
    if s > 1.0:
        s = 1.0
    return 2.0 * math.asin(s)


@njit(cache=True)
def _tendon_excursion(radius, alpha, alpha0):
    x = radius * (alpha0 - alpha)
    return x if x > 0.0 else 0.0


# -- public API ---------------------------------------------------------------

def _check_alpha(alpha):
    if not 0.0 < alpha < math.pi:
        raise KinematicsError(f"knee angle {alpha!r} rad outside (0, pi)")


def leg_length(geom: LegGeometry, alpha: float) -> float:
    """Virtual leg length [m] at knee angle ``alpha`` [rad]."""
    _check_alpha(alpha)
    return _leg_length(geom.l_eff, alpha)


def leg_jacobian(geom: LegGeometry, alpha: float) -> float:
    """Derivative of leg length with respect to knee angle [m/rad]."""
    _check_alpha(alpha)
    return _leg_jacobian(geom.l_eff, alpha)


def alpha_of_length(geom: LegGeometry, length: float) -> float:
    """Inverse of :func:`leg_length` on (0, 2 * l_eff)."""
    if not 0.0 < length < 2.0 * geom.l_eff:
        raise KinematicsError(f"leg length {length!r} m not reachable")
    return _alpha_of_length(geom.l_eff, length)


def tendon_excursion(radius: float, alpha: float, alpha0: float) -> float:
    """Tendon pull-in ``radius * (alpha0 - alpha)``, zero on hyperextension."""
    return _tendon_excursion(radius, alpha, alpha0)


def knee_torque_to_axial_force(geom: LegGeometry, alpha: float, tau_total: float) -> float:
    """Axial leg force [N] produced by an extending knee torque [N m].

    Positive values push the hip away from the foot.
    """
    jac = leg_jacobian(geom, alpha)
    if jac < JACOBIAN_MIN:
        raise KinematicsError(f"leg Jacobian singular at alpha={alpha!r}")
    return tau_total / jac
