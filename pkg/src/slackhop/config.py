"""Scenario and sweep configuration with JSON round-tripping.

Every quantity is stored in SI base units (angles in radians).  A config file
is a JSON object with a ``schema_version`` field and one section per
parameter group; missing fields take their defaults and unknown fields are
rejected, so typos surface as errors naming the offending field.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Union

import numpy as np

from .actuation import MotorParams
from .compliance import DamperParams, SpringParams
from .control import CpgParams, VerticalSchedule, critical_gains
from .dynamics import BodyParams, IntegratorConfig
from .kinematics import LegGeometry
from .terrain import TerrainProfile

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ScenarioConfig",
    "SweepSpec",
    "PROTOCOLS",
    "default_vertical",
    "default_forward",
    "load_config",
    "save_config",
    "load_sweep",
    "save_sweep",
    "config_to_dict",
    "config_from_dict",
    "sweep_to_dict",
    "sweep_from_dict",
    "default_sweep",
]

SCHEMA_VERSION = 1
PROTOCOLS = ("step_down", "rough", "ramp")

# Fitted by slackhop.harness.calibrate against the standby damper energies
# and the flat-terrain cost of transport; see README for the procedure.
CALIBRATED_C = 167.4
CALIBRATED_K_REC = 834.0
CALIBRATED_R = 1.208

VERTICAL_PARASITIC = 0.415
# Knee torque per slack [mm -> N m] inside the 4.0 to 4.3 N m band.
VERTICAL_TORQUE_MAP = {"0": 4.0, "3": 4.0, "6": 4.0, "10": 4.3}
NOMINAL_STRIDE_SPEED = 0.8  # m/s, only used to size seeded terrain offsets


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully specified, deterministic trial."""

    body: BodyParams = field(default_factory=BodyParams)
    geometry: LegGeometry = field(default_factory=LegGeometry)
    spring: SpringParams = field(default_factory=SpringParams)
    damper: DamperParams = field(default_factory=DamperParams)
    motor: MotorParams = field(default_factory=MotorParams)
    controller: Union[VerticalSchedule, CpgParams] = field(default_factory=VerticalSchedule)
    terrain: TerrainProfile = field(default_factory=TerrainProfile)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    seed: int = 0
    repetition: int = 0
    repetitions: int = 1
    duration: float = 60.0
    revolutions: float = 6.0
    removal_after: float = 30.0
    drop_height: float = 0.02
    start_height: float = 0.45
    start_speed: float = 0.8
    min_speed: float = 0.2
    penetration: float = 0.005
    knee_torque_map: dict = field(default_factory=dict)

    def __post_init__(self):
        vertical = isinstance(self.controller, VerticalSchedule)
        if vertical and self.terrain.kind not in ("flat", "step_down"):
            raise ConfigError("terrain.kind", "vertical controller needs flat or step_down terrain")
        if not vertical and self.terrain.kind == "step_down":
            raise ConfigError("terrain.kind", "step_down terrain needs the vertical controller")
        if not self.duration > 0.0:
            raise ConfigError("duration", "must be > 0")
        if not self.revolutions > 0.0:
            raise ConfigError("revolutions", "must be > 0")
        if self.repetitions < 1:
            raise ConfigError("repetitions", "must be >= 1")
        if not 0 <= self.repetition < self.repetitions:
            raise ConfigError("repetition", "must lie in [0, repetitions)")
        if self.removal_after < 0.0:
            raise ConfigError("removal_after", "must be >= 0")
        if self.drop_height < 0.0:
            raise ConfigError("drop_height", "must be >= 0")
        if not self.min_speed > 0.0:
            raise ConfigError("min_speed", "must be > 0")
        if self.penetration < 0.0:
            raise ConfigError("penetration", "must be >= 0")
        for k, v in self.knee_torque_map.items():
            try:
                float(k)
            except ValueError:
                raise ConfigError(f"knee_torque_map.{k}", "keys are slack values in mm") from None
            if not float(v) >= 0.0:
                raise ConfigError(f"knee_torque_map.{k}", "torque must be >= 0")

    @property
    def rig(self) -> str:
        return "vertical" if isinstance(self.controller, VerticalSchedule) else "forward"

    def knee_torque(self) -> float:
        """Vertical knee torque: the per-slack map if given, else ``controller.tau_v``."""
        if not isinstance(self.controller, VerticalSchedule):
            return self.controller.tau_f
        if not self.knee_torque_map:
            return self.controller.tau_v
        keys = sorted(self.knee_torque_map, key=float)
        xs = np.array([float(k) for k in keys])
        ys = np.array([float(self.knee_torque_map[k]) for k in keys])
        return float(np.interp(self.damper.slack * 1e3, xs, ys))

    def phase_offset(self) -> float:
        """Seeded fraction of a gait cycle in [0, 1) for this repetition."""
        rng = np.random.default_rng([int(self.seed), int(self.repetition)])
        return float(rng.random())

    def removal_time(self) -> float:
        """Earliest time at which the step-down block may be removed."""
        return self.removal_after + self.phase_offset() / self.controller.f_v

    def effective_terrain(self) -> TerrainProfile:
        """Terrain with the seeded position offset applied (forward rig only)."""
        if self.rig != "forward" or self.terrain.kind == "flat":
            return self.terrain
        stride = NOMINAL_STRIDE_SPEED / self.controller.f_f
        return replace(self.terrain, offset=self.terrain.offset + self.phase_offset() * stride)

    def with_slack(self, slack: float) -> "ScenarioConfig":
        return replace(self, damper=replace(self.damper, slack=slack))


# -- defaults -------------------------------------------------------------------

def default_vertical(**overrides) -> ScenarioConfig:
    """Vertical rig with the nominal schedule and calibrated damper and motor constants."""
    cfg = ScenarioConfig(
        body=BodyParams(m=1.94, parasitic_damping=VERTICAL_PARASITIC),
        damper=DamperParams(c=CALIBRATED_C, k_rec=CALIBRATED_K_REC, slack=0.0),
        motor=MotorParams(R=CALIBRATED_R),
        controller=VerticalSchedule(f_v=2.2, tau_v=4.0, duty=0.22, phase0=0.55),
        terrain=TerrainProfile(kind="flat"),
        knee_torque_map=dict(VERTICAL_TORQUE_MAP),
    )
    return replace(cfg, **overrides) if overrides else cfg


def default_forward(**overrides) -> ScenarioConfig:
    """Boom rig with the nominal CPG gait and calibrated damper and motor constants."""
    kp, kd = critical_gains(0.005, 12.0)
    cfg = ScenarioConfig(
        body=BodyParams(m=0.94, parasitic_damping=0.0),
        damper=DamperParams(c=CALIBRATED_C, k_rec=CALIBRATED_K_REC, slack=0.0),
        motor=MotorParams(R=CALIBRATED_R),
        controller=CpgParams(kp=kp, kd=kd, swing_inertia=0.005, phase0=0.2),
        terrain=TerrainProfile(kind="flat"),
    )
    return replace(cfg, **overrides) if overrides else cfg


# -- serialization --------------------------------------------------------------

_SECTIONS = {
    "body": BodyParams,
    "geometry": LegGeometry,
    "spring": SpringParams,
    "damper": DamperParams,
    "motor": MotorParams,
    "terrain": TerrainProfile,
    "integrator": IntegratorConfig,
}
_CONTROLLERS = {"vertical": VerticalSchedule, "cpg": CpgParams}
_SCALARS = ("seed", "repetition", "repetitions", "duration", "revolutions", "removal_after",
            "drop_height", "start_height", "start_speed", "min_speed", "penetration")


def _init_fields(cls) -> list:
    return [f for f in fields(cls) if f.init]


def _section_to_dict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in _init_fields(type(obj))}


def _section_from_dict(name: str, cls, data: Any):
    if not isinstance(data, dict):
        raise ConfigError(name, "expected an object")
    known = {f.name: f for f in _init_fields(cls)}
    for k in data:
        if k not in known:
            raise ConfigError(f"{name}.{k}", "unknown field")
    kwargs = {}
    for k, v in data.items():
        default = known[k].default
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"{name}.{k}", "expected true or false")
        elif isinstance(default, int) and not isinstance(default, bool):
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name}.{k}", "expected an integer")
        elif isinstance(default, float):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name}.{k}", "expected a number")
            v = float(v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        field_name = msg.split(" ")[0] if "." in msg.split(" ")[0] else name
        raise ConfigError(field_name, msg) from None


def config_to_dict(cfg: ScenarioConfig) -> dict:
    ctrl_type = "vertical" if isinstance(cfg.controller, VerticalSchedule) else "cpg"
    out = {"schema_version": SCHEMA_VERSION}
    for name in ("body", "geometry", "spring", "damper", "motor"):
        out[name] = _section_to_dict(getattr(cfg, name))
    out["controller"] = {"type": ctrl_type, **_section_to_dict(cfg.controller)}
    out["terrain"] = _section_to_dict(cfg.terrain)
    out["integrator"] = _section_to_dict(cfg.integrator)
    out["run"] = {k: getattr(cfg, k) for k in _SCALARS}
    out["run"]["knee_torque_map"] = dict(cfg.knee_torque_map)
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    allowed = set(_SECTIONS) | {"schema_version", "controller", "run"}
    for k in data:
        if k not in allowed:
            raise ConfigError(k, "unknown section")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _section_from_dict(name, cls, data[name])
    ctrl = dict(data.get("controller", {"type": "vertical"}))
    ctype = ctrl.pop("type", "vertical")
    if ctype not in _CONTROLLERS:
        raise ConfigError("controller.type", f"must be one of {sorted(_CONTROLLERS)}")
    kwargs["controller"] = _section_from_dict("controller", _CONTROLLERS[ctype], ctrl)
    run = dict(data.get("run", {}))
    tmap = run.pop("knee_torque_map", {})
    if not isinstance(tmap, dict):
        raise ConfigError("run.knee_torque_map", "expected an object")
    for k, v in run.items():
        if k not in _SCALARS:
            raise ConfigError(f"run.{k}", "unknown field")
        default = getattr(ScenarioConfig, k, None)
        if isinstance(default, int) and not isinstance(default, bool):
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"run.{k}", "expected an integer")
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"run.{k}", "expected a number")
        else:
            v = float(v)
        kwargs[k] = v
    kwargs["knee_torque_map"] = {str(k): float(v) for k, v in tmap.items()}
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<root>", str(exc)) from None


def _dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(_dumps(config_to_dict(cfg)))


def load_config(path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def packaged_default(name: str) -> ScenarioConfig:
    """Load one of the shipped defaults files (``vertical`` or ``forward``)."""
    text = resources.files("slackhop").joinpath("data", f"{name}.json").read_text()
    return config_from_dict(json.loads(text))


# -- sweeps ---------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Grid of slacks and perturbation levels with repetitions per cell.

    ``levels`` are leg-length fractions for ``step_down`` and ``ramp`` and
    amplitudes in metres for ``rough``.
    """

    protocol: str
    base: ScenarioConfig
    slacks: tuple = (0.010, 0.006, 0.003, 0.0)
    levels: tuple = (0.10, 0.15)
    repetitions: int = 10

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError("protocol", f"must be one of {PROTOCOLS}")
        if not self.slacks:
            raise ConfigError("slacks", "must not be empty")
        if not self.levels:
            raise ConfigError("levels", "must not be empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions", "must be >= 1")
        if any(s < 0.0 for s in self.slacks):
            raise ConfigError("slacks", "must be >= 0")
        if any(v < 0.0 for v in self.levels):
            raise ConfigError("levels", "must be >= 0")
        want = "vertical" if self.protocol == "step_down" else "forward"
        if self.base.rig != want:
            raise ConfigError("base.controller", f"{self.protocol} sweeps need the {want} controller")

    def cells(self) -> list:
        """(level, slack) pairs in the deterministic execution order."""
        return [(lv, sl) for lv in self.levels for sl in self.slacks]

    def terrain_for(self, level: float) -> TerrainProfile:
        if self.protocol == "step_down":
            return TerrainProfile.step_down(level)
        if self.protocol == "rough":
            return TerrainProfile.rough(level)
        return TerrainProfile.ramp(level)

    def trials(self) -> list:
        """Expanded configs, ordered by cell then repetition."""
        out = []
        for lv, sl in self.cells():
            base = replace(self.base.with_slack(sl), terrain=self.terrain_for(lv),
                           repetitions=self.repetitions)
            for r in range(self.repetitions):
                out.append(((lv, sl, r), replace(base, repetition=r)))
        return out


def default_sweep(protocol: str, seed: int = 0) -> SweepSpec:
    if protocol == "step_down":
        return SweepSpec("step_down", default_vertical(seed=seed), levels=(0.10, 0.15), repetitions=10)
    if protocol == "rough":
        return SweepSpec("rough", default_forward(seed=seed, revolutions=6.0),
                         levels=(0.0, 0.005, 0.010), repetitions=4)
    if protocol == "ramp":
        return SweepSpec("ramp", default_forward(seed=seed, revolutions=12.0),
                         levels=(0.15, 0.30), repetitions=10)
    raise ConfigError("protocol", f"must be one of {PROTOCOLS}")


def sweep_to_dict(spec: SweepSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "protocol": spec.protocol,
        "slacks": list(spec.slacks),
        "levels": list(spec.levels),
        "repetitions": spec.repetitions,
        "base": config_to_dict(spec.base),
    }


def sweep_from_dict(data: dict) -> SweepSpec:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}")
    for k in data:
        if k not in ("schema_version", "protocol", "slacks", "levels", "repetitions", "base"):
            raise ConfigError(k, "unknown field")
    protocol = data.get("protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError("protocol", f"must be one of {PROTOCOLS}")
    base_data = data.get("base")
    if base_data is None:
        base = default_sweep(protocol).base
    else:
        base = config_from_dict(base_data)
    slacks = data.get("slacks", [0.010, 0.006, 0.003, 0.0])
    levels = data.get("levels", list(default_sweep(protocol).levels))
    for name, seq in (("slacks", slacks), ("levels", levels)):
        if not isinstance(seq, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in seq):
            raise ConfigError(name, "expected a list of numbers")
    reps = data.get("repetitions", default_sweep(protocol).repetitions)
    if not isinstance(reps, int) or isinstance(reps, bool):
        raise ConfigError("repetitions", "expected an integer")
    return SweepSpec(protocol, base, tuple(float(s) for s in slacks),
                     tuple(float(v) for v in levels), reps)


def save_sweep(spec: SweepSpec, path) -> None:
    Path(path).write_text(_dumps(sweep_to_dict(spec)))


def load_sweep(path) -> SweepSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return sweep_from_dict(data)

