import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slackhop.terrain import TRACK_LENGTH, TerrainProfile, discontinuities, height_at


def test_track_length():
    assert TRACK_LENGTH == pytest.approx(2 * math.pi * 1.613)
    assert TRACK_LENGTH == pytest.approx(10.135, abs=1e-3)


def test_examples():
    sd = TerrainProfile.step_down(0.15)
    assert height_at(sd, 0.0) == pytest.approx(0.047)
    assert height_at(sd, 0.0, removed=True) == 0.0
    assert TerrainProfile.step_down(0.10).block_height == pytest.approx(0.031)
    rough = TerrainProfile.rough(0.010)
    assert height_at(rough, rough.wavelength / 4) == pytest.approx(0.010)
    ramp = TerrainProfile.ramp(0.30)
    assert height_at(ramp, ramp.ramp_length - 1e-9) == pytest.approx(0.093, abs=1e-9)
    assert height_at(ramp, ramp.ramp_length + 1e-9) == 0.0
    assert height_at(TerrainProfile(), 3.7) == 0.0


def test_discontinuities():
    assert discontinuities(TerrainProfile()) == []
    assert discontinuities(TerrainProfile.ramp(0.15)) == [pytest.approx(3.0)]
    edges = discontinuities(TerrainProfile.rough(0.005))
    assert len(edges) == 2
    assert edges[1] - edges[0] == pytest.approx(27 * 0.36)


def test_validation():
    with pytest.raises(ValueError, match="terrain.kind"):
        TerrainProfile(kind="stairs")
    with pytest.raises(ValueError, match="ramp_length"):
        TerrainProfile(kind="ramp_step", ramp_length=20.0)


@given(st.sampled_from(["rough", "ramp"]), st.floats(0.0, 0.01), st.floats(0.0, 3 * TRACK_LENGTH),
       st.floats(0.0, 5.0))
def test_periodic(kind, level, x, offset):
    t = TerrainProfile.rough(level, offset) if kind == "rough" else TerrainProfile.ramp(level * 30, offset)
    assert height_at(t, x + t.track_length) == pytest.approx(height_at(t, x), abs=1e-9)


@given(st.floats(0.001, 0.02), st.integers(0, 26))
def test_sinusoid_zero_mean_per_block(amp, k):
    t = TerrainProfile.rough(amp)
    x = k * t.wavelength + np.linspace(0.0, t.wavelength, 2001)[:-1]
    h = np.array([height_at(t, v) for v in x])
    assert abs(h.mean()) < 1e-6 * amp + 1e-12
