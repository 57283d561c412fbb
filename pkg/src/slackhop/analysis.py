"""Signal processing and trial metrics.

Filtering follows the usual biomechanics recipe: a low-pass Butterworth run
forwards and backwards so the output has no phase lag, with the cutoff picked
by Winter's residual analysis.  Metrics reduce a :class:`TrialRecord` to the
numbers reported per trial: cost of hopping or transport, standby and extra
damper dissipation, engagement delay, recovery steps and failure counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import signal

__all__ = [
    "MetricError",
    "FilterSpec",
    "WorkLoop",
    "TrialMetrics",
    "FailureCounts",
    "butterworth_zero_lag",
    "residual_cutoff",
    "residual_curve",
    "moving_average",
    "coh",
    "cot",
    "recovery_steps",
    "engagement_delay",
    "cycle_time_std",
    "classify_failures",
    "work_loop",
    "loop_area",
    "trial_metrics",
    "STEADY_WINDOW",
    "TraceStep",
    "steps_from_trace",
]

G = 9.81
STEADY_WINDOW = 10
RECOVERY_BAND = 0.04
FAILURE_WINDOW = 5


class MetricError(ValueError):
    """Raised when a metric is undefined for the given input."""


@dataclass(frozen=True)
class FilterSpec:
    order: int = 4
    cutoff: float = 15.0
    sample_rate: float = 1000.0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("filter.order must be >= 1")
        if not 0.0 < self.cutoff < 0.5 * self.sample_rate:
            raise ValueError("filter.cutoff must lie in (0, sample_rate / 2)")


@dataclass(frozen=True)
class WorkLoop:
    """Damper force against piston position over one stance."""

    piston_pos: np.ndarray
    force: np.ndarray

    @property
    def enclosed_energy(self) -> float:
        return loop_area(self.piston_pos, self.force)


@dataclass(frozen=True)
class FailureCounts:
    encounters: int = 0
    slip: int = 0
    stop: int = 0
    failed: int = 0


@dataclass
class TrialMetrics:
    """Per-trial numbers.  Energies in J, times in s, lengths in m."""

    rig: str
    n_steps: int = 0
    coh: float = math.nan
    cot: float = math.nan
    speed: float = math.nan
    hop_height: float = math.nan
    recovery_steps: Optional[float] = None
    standby_E_d: float = math.nan
    extra_E_d: float = math.nan
    delay: float = math.nan
    cycle_std: float = math.nan
    failures: FailureCounts = field(default_factory=FailureCounts)
    apexes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    failure: Optional[str] = None


# -- filters -------------------------------------------------------------------

def butterworth_zero_lag(x, spec: FilterSpec) -> np.ndarray:
    """Low-pass ``x`` forwards and backwards with a Butterworth cascade.

    The two passes cancel each other's phase, and the gain at the cutoff is
    the square of the single-pass -3 dB point, i.e. 0.5.  Ends are padded by
    odd (point) reflection over about two cutoff periods, which carries
    linear trends through unchanged.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size <= 6 * spec.order:
        raise MetricError(f"series too short: need more than {6 * spec.order} samples")
    sos = signal.butter(spec.order, spec.cutoff, btype="low", fs=spec.sample_rate, output="sos")
    # pad by about two periods of the cutoff so start-up transients decay
    settle = int(math.ceil(2.0 * spec.sample_rate / spec.cutoff))
    padlen = min(max(3 * (2 * sos.shape[0] + 1), settle), x.size - 1)
    return signal.sosfiltfilt(sos, x, padtype="odd", padlen=padlen)


RESIDUAL_RULES = ("edge", "intercept")


def residual_curve(x, sample_rate: float, candidates: Sequence[float], order: int = 4) -> np.ndarray:
    """RMS difference between ``x`` and its zero-lag filtered version per cutoff."""
    x = np.asarray(x, dtype=float)
    return np.array([
        np.sqrt(np.mean((x - butterworth_zero_lag(x, FilterSpec(order, f, sample_rate))) ** 2))
        for f in candidates
    ])


def residual_cutoff(x, sample_rate: float, candidates: Optional[Sequence[float]] = None,
                    order: int = 4, tail: float = 0.5, rule: str = "edge") -> float:
    """Pick a cutoff by residual analysis.

    The RMS residual between ``x`` and its filtered version is computed for
    each candidate cutoff.  White noise contributes a residual power that
    falls linearly with the cutoff, so a straight line fitted to the squared
    residuals over the upper ``tail`` of the candidates models the noise; its
    value at zero is the noise intercept.

    ``rule="intercept"`` returns the first cutoff whose residual drops to the
    noise intercept (Winter's horizontal-line construction).  It balances
    signal distortion against passed noise, so for clean signals it lands
    well above the highest signal frequency.

    ``rule="edge"`` (default) estimates the signal band edge instead.  The
    signal part of the residual power is the excess over the noise line; the
    zero-lag filter halves a component's amplitude exactly at the cutoff, so
    the returned frequency is where that excess falls to a quarter of its
    peak, linearly interpolated between candidates.

    Degenerate input: a residual below 0.01 % of the signal range
    (noise-free, smooth data) returns the highest candidate; a residual with no
    significant excess over the noise line returns the lowest.
    """
    if rule not in RESIDUAL_RULES:
        raise ValueError(f"rule must be one of {RESIDUAL_RULES}")
    x = np.asarray(x, dtype=float)
    if candidates is None:
        candidates = np.arange(1.0, 0.25 * sample_rate, 0.5)
    fc = np.asarray(candidates, dtype=float)
    if fc.size < 4 or np.any(np.diff(fc) <= 0.0):
        raise ValueError("need at least four increasing candidate cutoffs")
    res = residual_curve(x, sample_rate, fc, order)
    scale = max(np.max(np.abs(x - x.mean())), np.finfo(float).tiny)
    if np.max(res) <= 1e-4 * scale:
        return float(fc[-1])
    k = max(3, int(round(tail * fc.size)))
    power = res ** 2
    slope, intercept = np.polyfit(fc[-k:], power[-k:], 1)
    if rule == "intercept":
        hit = np.flatnonzero(power <= intercept)
        return float(fc[hit[0]]) if hit.size else float(fc[-1])
    excess = power - (intercept + slope * fc)
    spread = float(np.std(excess[-k:]))
    peak = float(np.max(excess))
    if peak <= max(5.0 * spread, 0.05 * max(intercept, 0.0), 1e-12 * scale ** 2):
        return float(fc[0])
    i_peak = int(np.argmax(excess))
    level = 0.25 * peak
    below = np.flatnonzero(excess[i_peak:] <= level)
    if below.size == 0:
        return float(fc[-1])
    j = i_peak + int(below[0])
    if j == 0:
        return float(fc[0])
    e0, e1 = excess[j - 1], excess[j]
    w = (e0 - level) / (e0 - e1) if e0 != e1 else 0.0
    return float(fc[j - 1] + w * (fc[j] - fc[j - 1]))


def moving_average(x, span: int = 5) -> np.ndarray:
    """Centered moving mean whose window shrinks symmetrically near the ends."""
    if span < 1 or span % 2 == 0:
        raise ValueError("span must be a positive odd integer")
    x = np.asarray(x, dtype=float)
    n = x.size
    half = span // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    h = np.minimum(half, np.minimum(idx, n - 1 - idx))
    return (csum[idx + h + 1] - csum[idx - h]) / (2 * h + 1)


# -- scalar metrics ------------------------------------------------------------

def coh(E_elec: float, m: float, h_apex: float, g: float = G) -> float:
    """Cost of hopping: electrical energy per hop over apex potential energy."""
    if not h_apex > 0.0:
        raise MetricError("cost of hopping undefined for a non-positive apex")
    if not (E_elec >= 0.0 and m > 0.0 and g > 0.0):
        raise MetricError("cost of hopping needs E_elec >= 0 and positive m, g")
    return E_elec / (m * g * h_apex)


def cot(E_elec: float, m: float, d: float, g: float = G) -> float:
    """Cost of transport: electrical energy per distance over body weight."""
    if not d > 0.0:
        raise MetricError("cost of transport undefined for a non-positive distance")
    if not (m > 0.0 and g > 0.0):
        raise MetricError("cost of transport needs positive m and g")
    return E_elec / (m * g * d)


def recovery_steps(apex, perturb_index: int, window: int = STEADY_WINDOW,
                   band: float = RECOVERY_BAND) -> Optional[int]:
    """Steps after a perturbation until the apex is back within ``band`` of reference.

    The reference is the mean of up to ``window`` apexes before
    ``perturb_index``.  The result counts from 1 at the perturbed step and is
    ``None`` when no later apex returns to the band.
    """
    apex = np.asarray(apex, dtype=float)
    if perturb_index < 3 or perturb_index > apex.size:
        raise MetricError("need at least three steps before the perturbation")
    ref = float(np.mean(apex[max(0, perturb_index - window):perturb_index]))
    lo, hi = (1.0 - band) * ref, (1.0 + band) * ref
    if lo > hi:
        lo, hi = hi, lo
    post = apex[perturb_index:]
    inside = np.flatnonzero((post >= lo) & (post <= hi))
    return int(inside[0]) + 1 if inside.size else None


def engagement_delay(spring_force, damper_force, dt: float, threshold: float = 0.5) -> float:
    """Time from spring-force onset to damper-force onset in one stance [s].

    Returns NaN when either force never exceeds ``threshold``.
    """
    fs = np.asarray(spring_force, dtype=float)
    fd = np.asarray(damper_force, dtype=float)
    i_s = np.flatnonzero(fs > threshold)
    i_d = np.flatnonzero(fd > threshold)
    if i_s.size == 0 or i_d.size == 0:
        return math.nan
    return max(0, int(i_d[0]) - int(i_s[0])) * dt


def cycle_time_std(touchdown_times) -> float:
    """Sample standard deviation of the intervals between touchdowns [s]."""
    t = np.asarray(touchdown_times, dtype=float)
    if t.size < 3:
        raise MetricError("need at least three touchdowns")
    return float(np.std(np.diff(t), ddof=1))


def loop_area(x, f) -> float:
    """Trapezoidal integral of ``f`` along the path ``x`` (closed or open)."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.size < 2:
        return 0.0
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(x)))


def work_loop(record, step_index: int) -> WorkLoop:
    """Damper work loop of one stance in ``record``."""
    s = record.steps[step_index]
    t = record.column("t")
    i0, i1 = np.searchsorted(t, [s.touchdown_t, s.liftoff_t])
    return WorkLoop(piston_pos=record.column("piston_pos")[i0:i1 + 1].copy(),
                    force=record.column("f_damper")[i0:i1 + 1].copy())


def classify_failures(record, window: int = FAILURE_WINDOW) -> FailureCounts:
    """Count perturbation encounters followed by a slip or a stop.

    A step counts when the flag is raised on the perturbed step or one of the
    ``window - 1`` steps after it.
    """
    steps = record.steps
    n_slip = n_stop = n_fail = 0
    for j in record.perturb_steps:
        seg = steps[j:j + window]
        slip = any(s.slip for s in seg)
        stop = any(s.stop for s in seg) or (record.failure is not None and j + window > len(steps))
        n_slip += slip
        n_stop += stop
        n_fail += slip or stop
    return FailureCounts(encounters=len(record.perturb_steps), slip=n_slip, stop=n_stop, failed=n_fail)


# -- trial reduction -----------------------------------------------------------

def _steady_slice(n_steps: int, perturb: Optional[int], window: int) -> slice:
    end = perturb if perturb is not None else n_steps
    return slice(max(0, end - window), end)


def trial_metrics(record, m: float, g: float = G, window: int = STEADY_WINDOW,
                  crop_length: Optional[float] = None) -> TrialMetrics:
    """Reduce a trial to its metrics.

    Vertical trials use the ``window`` steps before the perturbation (or the
    last ``window`` steps when unperturbed) as the steady reference.  Forward
    trials drop the first and last ``crop_length`` of travel before computing
    speed and cost of transport.
    """
    steps = record.steps
    out = TrialMetrics(rig=record.rig, n_steps=len(steps), failure=record.failure,
                       apexes=np.array([s.apex for s in steps]))
    if not steps:
        return out
    perturb = record.perturb_steps[0] if record.perturb_steps else None
    steady = steps[_steady_slice(len(steps), perturb, window)]
    if steady:
        out.hop_height = float(np.mean([s.apex for s in steady]))
        out.standby_E_d = float(np.mean([s.E_d for s in steady]))
        delays = [s.delay_ms for s in steady if not math.isnan(s.delay_ms)]
        out.delay = float(np.mean(delays)) * 1e-3 if delays else math.nan
        if len(steady) >= 3:
            out.cycle_std = cycle_time_std([s.touchdown_t for s in steady])
        if record.rig == "vertical":
            vals = [coh(s.e_elec, m, s.apex, g) for s in steady if s.apex > 0.0]
            out.coh = float(np.mean(vals)) if vals else math.nan
    if perturb is not None:
        out.extra_E_d = steps[perturb].E_d - out.standby_E_d
        if perturb >= 3:
            out.recovery_steps = recovery_steps(out.apexes, perturb, window)
    if record.rig == "forward":
        _forward_metrics(record, out, m, g, crop_length, window)
    return out


def _forward_metrics(record, out: TrialMetrics, m: float, g: float,
                     crop_length: Optional[float], window: int) -> None:
    t = record.column("t")
    x = record.column("x")
    e = record.column("e_elec")
    if t.size < 2:
        return
    crop = crop_length if crop_length is not None else 0.0
    x_lo, x_hi = x[0] + crop, x[-1] - crop
    if x_hi <= x_lo:
        x_lo, x_hi = x[0], x[-1]
    i0 = int(np.searchsorted(x, x_lo)) if np.all(np.diff(x) >= 0) else 0
    i1 = int(np.searchsorted(x, x_hi)) if np.all(np.diff(x) >= 0) else x.size - 1
    i1 = min(max(i1, i0 + 1), x.size - 1)
    d = x[i1] - x[i0]
    dt = t[i1] - t[i0]
    if dt > 0.0:
        out.speed = d / dt
    if d > 0.0:
        out.cot = cot(e[i1] - e[i0], m, d, g)
    td = [s.touchdown_t for s in record.steps if t[i0] <= s.touchdown_t <= t[i1]]
    if len(td) >= 3:
        out.cycle_std = cycle_time_std(td)
    out.failures = classify_failures(record)
    recs = []
    apex = out.apexes
    for j in record.perturb_steps:
        if j >= 3:
            r = recovery_steps(apex, j, window)
            if r is not None:
                recs.append(r)
    out.recovery_steps = float(np.mean(recs)) if recs else None


# -- trace-only analysis -------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    """Per-stance quantities recoverable from a saved trace alone.

    ``apex`` is measured from the trace's height datum minus ``l0``, so it
    equals the foot clearance only on ground at height zero.  ``slip`` is
    ``None`` because the trace does not carry the tangential contact force.
    """

    step: int
    touchdown_t: float
    liftoff_t: float
    apex: float
    E_d: float
    delay_ms: float
    slip: Optional[bool]
    stop: bool


def steps_from_trace(t, x, y, grf, f_spring, f_damper, piston_pos, l0: float = 0.310,
                     threshold: float = 0.5, stop_progress: float = 0.010) -> list:
    """Segment a trace into stances by ground force and summarize each one.

    Stance is where ``grf`` exceeds ``threshold``.  Damper energy is the
    work-loop integral of ``f_damper`` over ``piston_pos`` during stance.  A
    stance counts as a stop when the hip advances less than ``stop_progress``
    between it and the next touchdown; vertical traces (constant ``x``)
    therefore never report stops.
    """
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        return []
    on = np.asarray(grf, dtype=float) > threshold
    edges = np.diff(on.astype(int))
    starts = list(np.flatnonzero(edges == 1) + 1)
    ends = list(np.flatnonzero(edges == -1) + 1)
    # a stance already running at the first sample has no touchdown; skip it
    ends = [e for e in ends if e > starts[0]] if starts else []
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dt = float(np.median(np.diff(t)))
    vertical = bool(np.ptp(x) == 0.0)
    out = []
    for n, (i0, i1) in enumerate(zip(starts, ends)):
        nxt = starts[n + 1] if n + 1 < len(starts) else None
        if nxt is None:
            break
        apex = float(np.max(y[i1:nxt])) - l0
        e_d = loop_area(piston_pos[i0:i1 + 1], f_damper[i0:i1 + 1])
        delay = engagement_delay(f_spring[i0:i1], f_damper[i0:i1], dt, threshold) * 1e3
        stop = (not vertical) and (x[nxt] - x[i0] < stop_progress)
        out.append(TraceStep(n + 1, float(t[i0]), float(t[i1]), apex, float(max(e_d, 0.0)),
                             float(delay), None, bool(stop)))
    return out
