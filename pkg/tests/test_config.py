import json
import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slackhop.config import (
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    config_from_dict,
    config_to_dict,
    default_forward,
    default_sweep,
    default_vertical,
    load_config,
    packaged_default,
    save_config,
    sweep_from_dict,
    sweep_to_dict,
)
from slackhop.control import VerticalSchedule
from slackhop.terrain import TerrainProfile


def test_defaults_carry_design_values():
    v = default_vertical()
    assert v.body.m == 1.94 and v.controller.f_v == 2.2 and v.controller.duty == 0.22
    assert v.duration == 60.0
    f = default_forward()
    assert f.body.m == 0.94
    assert math.degrees(f.controller.A_hip) == pytest.approx(18.0)
    assert math.degrees(f.controller.O_hip) == pytest.approx(2.0)
    assert f.controller.f_f == 1.85 and f.controller.D_vir == 0.4 and f.controller.tau_f == 1.3
    assert f.controller.knee_phase_shift == 0.75 and f.controller.knee_duty == 0.2


def test_shipped_files_match_builders():
    assert packaged_default("vertical") == default_vertical()
    assert packaged_default("forward") == default_forward()


@pytest.mark.parametrize("cfg", [default_vertical(), default_forward(),
                                 default_forward(terrain=TerrainProfile.ramp(0.3), seed=9)])
def test_round_trip(cfg, tmp_path):
    assert config_from_dict(config_to_dict(cfg)) == cfg
    path = tmp_path / "c.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


@given(st.floats(0.0, 0.02), st.integers(0, 2**31 - 1), st.floats(0.5, 8.0),
       st.floats(1.0, 120.0), st.floats(0.0, 0.8))
def test_round_trip_property(slack, seed, tau, duration, phase0):
    cfg = default_vertical(seed=seed, duration=duration,
                           controller=VerticalSchedule(tau_v=tau, phase0=phase0)).with_slack(slack)
    text = json.dumps(config_to_dict(cfg))
    assert config_from_dict(json.loads(text)) == cfg


def _vertical_dict():
    return config_to_dict(default_vertical())


def test_negative_slack_names_field():
    d = _vertical_dict()
    d["damper"]["slack"] = -0.001
    with pytest.raises(ConfigError, match="damper.slack"):
        config_from_dict(d)


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d["damper"].update(viscosity=1.0), "damper.viscosity"),
    (lambda d: d.update(extra={}), "extra"),
    (lambda d: d["run"].update(duration="long"), "run.duration"),
    (lambda d: d["run"].update(duration=-1.0), "duration"),
    (lambda d: d.update(schema_version=99), "schema_version"),
    (lambda d: d["controller"].update(type="raibert"), "controller.type"),
    (lambda d: d["integrator"].update(sample_every=2.5), "integrator.sample_every"),
    (lambda d: d["body"].update(m=0.0), "body.m"),
    (lambda d: d["terrain"].update(kind="sinusoid", amplitude=0.01), "terrain.kind"),
    (lambda d: d["run"]["knee_torque_map"].update(big=4.0), "knee_torque_map.big"),
])
def test_validation_messages(mutate, field):
    d = _vertical_dict()
    mutate(d)
    with pytest.raises(ConfigError) as exc:
        config_from_dict(d)
    assert field in str(exc.value)


def test_knee_torque_map_interpolates():
    cfg = default_vertical(knee_torque_map={"0": 4.0, "10": 4.3})
    assert cfg.with_slack(0.005).knee_torque() == pytest.approx(4.15)
    assert default_vertical(knee_torque_map={}).knee_torque() == 4.0


def test_seeded_offsets_reproducible_and_distinct():
    a = [default_vertical(seed=5, repetition=r, repetitions=10).phase_offset() for r in range(10)]
    b = [default_vertical(seed=5, repetition=r, repetitions=10).phase_offset() for r in range(10)]
    c = [default_vertical(seed=6, repetition=r, repetitions=10).phase_offset() for r in range(10)]
    assert a == b and a != c
    assert all(0.0 <= u < 1.0 for u in a) and len(set(a)) == 10


def test_removal_time_within_one_cycle():
    cfg = default_vertical(seed=1, terrain=TerrainProfile.step_down(0.1))
    assert cfg.removal_after <= cfg.removal_time() < cfg.removal_after + 1.0 / cfg.controller.f_v


def test_effective_terrain_offset():
    cfg = default_forward(seed=2, terrain=TerrainProfile.rough(0.005))
    off = cfg.effective_terrain().offset
    assert 0.0 <= off < 0.8 / cfg.controller.f_f
    assert default_forward().effective_terrain() == default_forward().terrain


def test_sweep_shapes_and_validation():
    assert len(default_sweep("step_down").trials()) == 80
    assert len(default_sweep("rough").trials()) == 48
    assert len(default_sweep("ramp").trials()) == 80
    base = default_vertical()
    with pytest.raises(ConfigError, match="slacks"):
        SweepSpec("step_down", base, slacks=())
    with pytest.raises(ConfigError, match="levels"):
        SweepSpec("step_down", base, levels=())
    with pytest.raises(ConfigError, match="protocol"):
        SweepSpec("stairs", base)
    with pytest.raises(ConfigError, match="base.controller"):
        SweepSpec("rough", base)


def test_sweep_order_deterministic():
    keys = [k for k, _ in default_sweep("rough").trials()]
    assert keys[0] == (0.0, 0.010, 0) and keys[3] == (0.0, 0.010, 3) and keys[4] == (0.0, 0.006, 0)


def test_sweep_round_trip():
    spec = default_sweep("ramp", seed=4)
    assert sweep_from_dict(json.loads(json.dumps(sweep_to_dict(spec)))) == spec


def test_scenario_direct_construction_checks():
    with pytest.raises(ConfigError, match="repetition"):
        ScenarioConfig(repetition=2, repetitions=2)
    with pytest.raises(ConfigError, match="terrain.kind"):
        replace(default_forward(), terrain=TerrainProfile.step_down(0.1))
