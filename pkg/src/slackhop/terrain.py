"""Ground height profiles for the vertical rig and the unrolled boom track."""
from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

__all__ = ["TerrainProfile", "height_at", "discontinuities", "KINDS"]

KINDS = ("flat", "step_down", "sinusoid", "ramp_step")
BOOM_RADIUS = 1.613
TRACK_LENGTH = 2.0 * math.pi * BOOM_RADIUS
LEG_LENGTH = 0.310


def _mm(x: float) -> float:
    """Round a height to whole millimetres, halves away from zero."""
    return math.floor(x * 1e3 + 0.5) / 1e3


@dataclass(frozen=True)
class TerrainProfile:
    """Terrain description.

    ``step_down`` is the vertical rig's removable block; the others are
    periodic in ``track_length`` and start at arc position ``offset``.
    """

    kind: str = "flat"
    block_height: float = 0.0
    amplitude: float = 0.0
    wavelength: float = 0.36
    n_blocks: int = 27
    ramp_length: float = 3.0
    ramp_height: float = 0.0
    track_length: float = TRACK_LENGTH
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"terrain.kind must be one of {KINDS}")
        if not self.track_length > 0.0:
            raise ValueError("terrain.track_length must be > 0")
        if self.kind == "sinusoid" and self.n_blocks * self.wavelength > self.track_length:
            raise ValueError("terrain: sinusoid blocks longer than the track")
        if self.kind == "ramp_step" and not 0.0 < self.ramp_length < self.track_length:
            raise ValueError("terrain.ramp_length must lie in (0, track_length)")

    @property
    def connector_length(self) -> float:
        return self.track_length - self.n_blocks * self.wavelength

    def as_tuple(self):
        """Flat float tuple consumed by the integrator kernels."""
        return (
            float(KINDS.index(self.kind)),
            float(self.block_height),
            float(self.amplitude),
            float(self.wavelength),
            float(self.n_blocks),
            float(self.ramp_length),
            float(self.ramp_height),
            float(self.track_length),
            float(self.offset),
        )

    @classmethod
    def step_down(cls, fraction_ll: float) -> "TerrainProfile":
        return cls(kind="step_down", block_height=_mm(fraction_ll * LEG_LENGTH))

    @classmethod
    def rough(cls, amplitude: float, offset: float = 0.0) -> "TerrainProfile":
        if amplitude == 0.0:
            return cls(kind="flat", offset=offset)
        return cls(kind="sinusoid", amplitude=amplitude, offset=offset)

    @classmethod
    def ramp(cls, fraction_ll: float, offset: float = 0.0) -> "TerrainProfile":
        return cls(kind="ramp_step", ramp_height=_mm(fraction_ll * LEG_LENGTH), offset=offset)


@njit(cache=True)
def _height(tp, x, removed):
    kind = int(tp[0])
    if kind == 0:
        return 0.0
    if kind == 1:
        return 0.0 if removed else tp[1]
    length = tp[7]
    u = (x - tp[8]) % length
    if kind == 2:
        if u < tp[4] * tp[3]:
            return tp[2] * math.sin(2.0 * math.pi * u / tp[3])
        return 0.0
    if u < tp[5]:
        return tp[6] * u / tp[5]
    return 0.0


def height_at(t: TerrainProfile, x: float, removed: bool = False) -> float:
    """Ground height [m] at arc position ``x``.

    ``removed`` is the step-down context: whether the block has been pushed
    away yet.  It is ignored by the other profiles.
    """
    return _height(t.as_tuple(), x, removed)


def discontinuities(t: TerrainProfile) -> list[float]:
    """Arc positions in [0, track_length) where the profile is not smooth.

    The step-down block changes in time rather than position and has none.
    """
    if t.kind in ("flat", "step_down"):
        return []
    if t.kind == "sinusoid":
        edges = [t.offset, t.offset + t.n_blocks * t.wavelength]
    else:
        edges = [t.offset + t.ramp_length]
    return sorted(e % t.track_length for e in edges)
