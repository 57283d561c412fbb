"""Hybrid simulation of the vertical rig and the boom-constrained forward rig.

The numerical work happens in :mod:`slackhop._engine`; this module assembles
the compiled parameter tuple from a :class:`~slackhop.config.ScenarioConfig`,
runs the integrator and turns its raw event log into per-step summaries.

Vertical rig
    The hip slides on a vertical rail.  In flight the leg is held at rest
    length.  Touchdown anchors the foot on the terrain under the hip and the
    body is driven by the axial leg force from spring, damper and knee motor.

Forward rig
    The boom is unrolled into a plane.  In flight the leg angle follows the
    hip reference exactly.  In stance the hip PD torque acts tangentially
    through the anchored foot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, TYPE_CHECKING

import numpy as np

from . import _engine as eng
from .actuation import joint_limit
from .control import CpgParams, VerticalSchedule

if TYPE_CHECKING:  # pragma: no cover
    from .config import ScenarioConfig

__all__ = [
    "BodyParams",
    "IntegratorConfig",
    "StepSummary",
    "TrialRecord",
    "SimulationError",
    "EventLocationError",
    "locate_event",
    "simulate",
    "simulate_vertical",
    "simulate_forward",
    "TRACE_COLUMNS",
    "PUBLIC_TRACE_COLUMNS",
    "ALPHA_MIN",
]

TRACE_COLUMNS = eng.TRACE_COLUMNS
PUBLIC_TRACE_COLUMNS = TRACE_COLUMNS[:12]
ALPHA_MIN = math.radians(20.0)
FORCE_ONSET = 0.5  # N, delay detection threshold
STOP_PROGRESS = 0.010  # m per controller cycle

_FAILURES = {
    eng.FAIL_NONE: None,
    eng.FAIL_BOTTOM: "bottomed-out",
    eng.FAIL_EVENTS: "event-overflow",
    eng.FAIL_BISECT: "event-location",
    eng.FAIL_FALL: "fell",
}


class SimulationError(RuntimeError):
    """Raised when a trial cannot be set up."""


class EventLocationError(SimulationError):
    """Raised when an event guard has no sign change on the bracket."""


@dataclass(frozen=True)
class BodyParams:
    """Lumped body and rig constants.

    ``parasitic_damping`` [N m s/rad] is a knee-referred viscous loss that
    stands in for rig friction.  The vertical rig needs it to settle into a
    periodic hop; the boom rig runs without it.
    """

    m: float = 1.94
    g: float = 9.81
    mu: float = 0.6
    parasitic_damping: float = 0.0

    def __post_init__(self):
        if not self.m > 0.0:
            raise ValueError("body.m must be > 0")
        if not self.g > 0.0:
            raise ValueError("body.g must be > 0")
        if self.mu < 0.0:
            raise ValueError("body.mu must be >= 0")
        if self.parasitic_damping < 0.0:
            raise ValueError("body.parasitic_damping must be >= 0")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings; ``sample_every`` grid steps make one trace row."""

    dt: float = 1e-4
    event_tol: float = 1e-7
    sample_every: int = 10
    max_events: int = 400_000

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("integrator.dt must be > 0")
        if not 0.0 < self.event_tol < self.dt:
            raise ValueError("integrator.event_tol must lie in (0, dt)")
        if self.sample_every < 1:
            raise ValueError("integrator.sample_every must be >= 1")
        if self.max_events < 16:
            raise ValueError("integrator.max_events must be >= 16")


@dataclass(frozen=True)
class StepSummary:
    """One stance and the flight that follows it.

    ``apex`` is the hip's apex above the ground under it minus the rest leg
    length, i.e. the foot clearance at apex [m].  ``E_d`` is the damper work
    over the stance [J].  ``delay_ms`` is NaN when the damper never fires.
    """

    step: int
    touchdown_t: float
    liftoff_t: float
    apex: float
    E_d: float
    delay_ms: float
    slip: bool
    stop: bool
    e_elec: float
    x_touchdown: float
    step_length: float
    perturbed: bool = False


@dataclass
class TrialRecord:
    """Output of one simulated trial."""

    rig: str
    trace: np.ndarray
    events: np.ndarray
    steps: list
    failure: Optional[str]
    sample_dt: float
    perturb_steps: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.trace[:, TRACE_COLUMNS.index(name)]

    def public_trace(self) -> np.ndarray:
        return self.trace[:, : len(PUBLIC_TRACE_COLUMNS)]

    def events_of(self, kind: int) -> np.ndarray:
        return self.events[self.events[:, 0] == kind]

    @property
    def apexes(self) -> np.ndarray:
        return np.array([s.apex for s in self.steps])


def locate_event(f: Callable[[float], float], t_lo: float, t_hi: float, tol: float = 1e-7) -> float:
    """Bisect a guard ``f`` that is positive at ``t_lo`` and not positive at ``t_hi``.

    Returns the earliest bracket end at which the guard is not positive, to
    within ``tol``.  This is the reference implementation of the rule the
    compiled integrators apply to every guard.
    """
    if not t_hi > t_lo:
        raise EventLocationError("t_hi must exceed t_lo")
    g_lo, g_hi = f(t_lo), f(t_hi)
    if not (g_lo > 0.0 and g_hi <= 0.0):
        raise EventLocationError("guard does not change sign on the bracket")
    lo, hi = t_lo, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


# -- parameter assembly -------------------------------------------------------

def _kparams(cfg: "ScenarioConfig") -> eng.KParams:
    geo, body, motor, ctrl = cfg.geometry, cfg.body, cfg.motor, cfg.controller
    if isinstance(ctrl, VerticalSchedule):
        k = dict(k_freq=ctrl.f_v, k_amp=cfg.knee_torque(), k_shift=0.0, k_duty=ctrl.duty,
                 k_phase0=ctrl.phase0, A_hip=0.0, O_hip=0.0, f_f=ctrl.f_v, D_vir=0.5,
                 kp=0.0, kd=0.0, swing_inertia=0.0)
    elif isinstance(ctrl, CpgParams):
        k = dict(k_freq=ctrl.f_f, k_amp=ctrl.tau_f, k_shift=ctrl.knee_phase_shift,
                 k_duty=ctrl.knee_duty, k_phase0=ctrl.phase0, A_hip=ctrl.A_hip,
                 O_hip=ctrl.O_hip, f_f=ctrl.f_f, D_vir=ctrl.D_vir, kp=ctrl.kp, kd=ctrl.kd,
                 swing_inertia=ctrl.swing_inertia)
    else:  # pragma: no cover - guarded by config validation
        raise SimulationError("unknown controller type")
    return eng.KParams(
        m=body.m, g=body.g, l0=geo.l0, l_eff=geo.l_eff, alpha0=geo.alpha0,
        r_k=geo.r_k, r_d=geo.r_d, k_k=cfg.spring.k_k,
        c=cfg.damper.c, exponent=cfg.damper.exponent, k_rec=cfg.damper.k_rec,
        slack=cfg.damper.slack,
        kt=motor.kt, R=motor.R, regen=1.0 if motor.allow_regen else 0.0,
        gear_knee=motor.gear_knee, gear_hip=motor.gear_hip,
        lim_knee=joint_limit(motor, "knee"), lim_hip=joint_limit(motor, "hip"),
        mu=body.mu if math.isfinite(body.mu) else 1e300,
        alpha_min=ALPHA_MIN, b_knee=body.parasitic_damping, **k,
    )


# -- per-step reduction -------------------------------------------------------

def _stance_delay(trace: np.ndarray, t0: float, t1: float, sample_dt: float) -> float:
    t = trace[:, 0]
    i0, i1 = np.searchsorted(t, [t0, t1])
    seg = slice(i0, max(i1, i0))
    fs = trace[seg, TRACE_COLUMNS.index("f_spring")]
    fd = trace[seg, TRACE_COLUMNS.index("f_damper")]
    from .analysis import engagement_delay

    return engagement_delay(fs, fd, sample_dt, threshold=FORCE_ONSET) * 1e3


def _steps(rec: TrialRecord, l0: float, period: float) -> list:
    ev = rec.events
    kinds = ev[:, 0].astype(int) if len(ev) else np.zeros(0, int)
    td_rows = np.flatnonzero(kinds == eng.EV_TOUCHDOWN)
    steps = []
    stop_cycles = _stopped_cycles(rec, period) if rec.rig == "forward" else set()
    for n, i_td in enumerate(td_rows):
        i_next = td_rows[n + 1] if n + 1 < len(td_rows) else len(ev)
        window = ev[i_td:i_next]
        wk = kinds[i_td:i_next]
        lo = window[wk == eng.EV_LIFTOFF]
        ap = window[wk == eng.EV_APEX]
        if lo.size == 0 or ap.size == 0:
            break  # trial ended inside this step
        td = ev[i_td]
        nxt = ev[i_next] if i_next < len(ev) else None
        e_d = (nxt[6] if nxt is not None else ap[0, 6]) - td[6]
        e_el = (nxt[5] if nxt is not None else ap[0, 5]) - td[5]
        apex = ap[0, 3] - ap[0, 4] - l0
        slip = bool(np.any(wk == eng.EV_SLIP))
        stop = int(td[1] // period) in stop_cycles
        delay = _stance_delay(rec.trace, td[1], lo[0, 1], rec.sample_dt)
        step_len = (nxt[2] - td[2]) if nxt is not None else float("nan")
        steps.append(StepSummary(
            step=n + 1, touchdown_t=float(td[1]), liftoff_t=float(lo[0, 1]), apex=float(apex),
            E_d=float(max(e_d, 0.0)), delay_ms=float(delay), slip=slip, stop=stop,
            e_elec=float(e_el), x_touchdown=float(td[2]), step_length=float(step_len),
        ))
    return steps


def _stopped_cycles(rec: TrialRecord, period: float) -> set:
    t = rec.column("t")
    x = rec.column("x")
    if t.size < 2:
        return set()
    n_cycles = int(t[-1] // period)
    marks = np.interp(np.arange(n_cycles + 1) * period, t, x)
    return {k for k in range(n_cycles) if marks[k + 1] - marks[k] < STOP_PROGRESS}


# -- public entry points -------------------------------------------------------

def simulate_vertical(cfg: "ScenarioConfig") -> TrialRecord:
    """Run the vertical rig for ``cfg.duration`` seconds."""
    if not isinstance(cfg.controller, VerticalSchedule):
        raise SimulationError("simulate_vertical needs a VerticalSchedule controller")
    if cfg.terrain.kind not in ("flat", "step_down"):
        raise SimulationError("the vertical rig supports flat and step_down terrain only")
    p = _kparams(cfg)
    integ = cfg.integrator
    ground = cfg.terrain.block_height if cfg.terrain.kind == "step_down" else 0.0
    y0 = cfg.geometry.l0 + ground + cfg.drop_height
    removal = cfg.removal_time() if cfg.terrain.kind == "step_down" else math.inf
    trace, events, status = eng.run_vertical(
        p, cfg.terrain.as_tuple(), y0, cfg.duration, integ.dt, integ.event_tol,
        integ.sample_every, removal, integ.max_events,
    )
    rec = TrialRecord(rig="vertical", trace=trace, events=events, steps=[],
                      failure=_FAILURES[status], sample_dt=integ.dt * integ.sample_every)
    rec.steps = _steps(rec, cfg.geometry.l0, 1.0 / cfg.controller.f_v)
    rem = rec.events_of(eng.EV_REMOVAL)
    if rem.size:
        t_rem = rem[0, 1]
        idx = next((i for i, s in enumerate(rec.steps) if s.touchdown_t > t_rem), None)
        if idx is not None:
            rec.steps[idx] = _replace_perturbed(rec.steps[idx])
            rec.perturb_steps = [idx]
    rec.info = {"removal_time": float(rem[0, 1]) if rem.size else None, "y0": y0}
    return rec


def simulate_forward(cfg: "ScenarioConfig") -> TrialRecord:
    """Run the boom rig for ``cfg.revolutions`` laps of the track."""
    if not isinstance(cfg.controller, CpgParams):
        raise SimulationError("simulate_forward needs a CpgParams controller")
    if cfg.terrain.kind == "step_down":
        raise SimulationError("step_down terrain belongs to the vertical rig")
    p = _kparams(cfg)
    integ = cfg.integrator
    terrain = cfg.effective_terrain()
    track = terrain.track_length
    x_end = cfg.revolutions * track
    t_end = cfg.revolutions * track / cfg.min_speed
    trace, events, status = eng.run_forward(
        p, terrain.as_tuple(), 0.0, cfg.start_height, cfg.start_speed, t_end,
        integ.dt, integ.event_tol, integ.sample_every, integ.max_events, cfg.penetration, x_end,
    )
    rec = TrialRecord(rig="forward", trace=trace, events=events, steps=[],
                      failure=_FAILURES[status], sample_dt=integ.dt * integ.sample_every)
    period = 1.0 / cfg.controller.f_f
    rec.steps = _steps(rec, cfg.geometry.l0, period)
    if rec.failure is None and trace[-1, TRACE_COLUMNS.index("x")] < x_end:
        rec.failure = "stopped"
    if terrain.kind == "ramp_step":
        edge = (terrain.offset + terrain.ramp_length) % track
        idx = []
        for k in range(int(cfg.revolutions) + 2):
            x_drop = edge + k * track
            j = next((i for i, s in enumerate(rec.steps) if s.x_touchdown > x_drop), None)
            if j is not None and (not idx or idx[-1] != j):
                idx.append(j)
        for j in idx:
            rec.steps[j] = _replace_perturbed(rec.steps[j])
        rec.perturb_steps = idx
    rec.info = {"x_end": x_end, "track_length": track}
    return rec


def simulate(cfg: "ScenarioConfig") -> TrialRecord:
    """Dispatch on the controller variant."""
    if isinstance(cfg.controller, VerticalSchedule):
        return simulate_vertical(cfg)
    return simulate_forward(cfg)


def _replace_perturbed(s: StepSummary) -> StepSummary:
    return replace(s, perturbed=True)
