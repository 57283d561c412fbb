"""Trial execution, sweeps, calibration and CSV persistence.

Every output file is written from the calling process after the trials it
summarizes have finished, so sweep workers share no mutable state.  Numbers
are written with a fixed ``%.10g`` format so repeated runs with equal seeds
produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import TrialMetrics, trial_metrics
from .config import (
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    config_to_dict,
    default_forward,
    default_vertical,
    save_config,
)
from .dynamics import PUBLIC_TRACE_COLUMNS, SimulationError, TrialRecord, simulate

__all__ = [
    "STEPS_COLUMNS",
    "METRICS_COLUMNS",
    "CELL_COLUMNS",
    "DEFAULT_TARGETS",
    "CalibrationTargets",
    "CalibrationResult",
    "TrialResult",
    "run_trial",
    "run",
    "sweep",
    "calibrate",
    "apply_overlay",
    "load_targets",
    "write_csv",
    "metrics_row",
]

log = logging.getLogger(__name__)

STEPS_COLUMNS = ("step", "touchdown_t", "liftoff_t", "apex", "E_d", "delay_ms", "slip", "stop")
METRICS_COLUMNS = (
    "protocol", "level", "slack_mm", "repetition", "seed", "rig",
    "hop_height_mm", "E_d_mJ", "extra_E_d_mJ", "extra_E_d_pct", "delay_ms",
    "recovery_steps", "coh", "speed_m_s", "cot", "cycle_std_ms",
    "encounters", "slip", "stop", "failed", "n_steps", "failure",
)
CELL_COLUMNS = (
    "protocol", "level", "slack_mm", "n_trials", "n_failed_trials",
    "hop_height_mm", "E_d_mJ", "extra_E_d_mJ", "extra_E_d_pct", "delay_ms",
    "recovery_steps", "coh", "speed_m_s", "cot", "cycle_std_ms",
    "encounters", "slip", "stop", "failed",
)
_CELL_SUMS = ("encounters", "slip", "stop", "failed")


# -- formatting ------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return "%.10g" % v
    return str(v)


def write_csv(path, columns, rows) -> None:
    """Write ``rows`` (sequences aligned with ``columns``) with fixed formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _step_rows(record: TrialRecord) -> list:
    return [(s.step, s.touchdown_t, s.liftoff_t, s.apex, s.E_d, s.delay_ms, s.slip, s.stop)
            for s in record.steps]


# -- single trials -----------------------------------------------------------------

@dataclass
class TrialResult:
    """Metrics row of one trial; ``record`` is dropped when results cross processes."""

    key: tuple
    row: dict
    record: Optional[TrialRecord] = None
    error: Optional[str] = None


def crop_length(cfg: ScenarioConfig) -> Optional[float]:
    """Forward metrics skip the first and last lap of the track."""
    return cfg.terrain.track_length if cfg.rig == "forward" else None


def run_trial(cfg: ScenarioConfig) -> tuple[TrialRecord, TrialMetrics]:
    record = simulate(cfg)
    metrics = trial_metrics(record, cfg.body.m, cfg.body.g, crop_length=crop_length(cfg))
    return record, metrics


def _level_of(cfg: ScenarioConfig) -> float:
    t = cfg.terrain
    ll = 0.310
    if t.kind == "step_down":
        return round(t.block_height / ll, 2)
    if t.kind == "ramp_step":
        return round(t.ramp_height / ll, 2)
    if t.kind == "sinusoid":
        return t.amplitude
    return 0.0


def _protocol_of(cfg: ScenarioConfig) -> str:
    return {"step_down": "step_down", "sinusoid": "rough", "ramp_step": "ramp"}.get(
        cfg.terrain.kind, "flat")


def metrics_row(cfg: ScenarioConfig, m: Optional[TrialMetrics], protocol: Optional[str] = None,
                level: Optional[float] = None, failure: Optional[str] = None) -> dict:
    """One metrics-table row in display units (mm, mJ, ms)."""
    row = {c: math.nan for c in METRICS_COLUMNS}
    row.update(protocol=protocol or _protocol_of(cfg),
               level=_level_of(cfg) if level is None else level,
               slack_mm=round(cfg.damper.slack * 1e3, 6), repetition=cfg.repetition,
               seed=cfg.seed, rig=cfg.rig, failure=failure or "")
    if m is None:
        row.update(encounters=0, slip=0, stop=0, failed=0, n_steps=0, recovery_steps=None)
        return row
    extra_pct = (100.0 * m.extra_E_d / m.standby_E_d
                 if m.standby_E_d > 0.0 and not math.isnan(m.extra_E_d) else math.nan)
    row.update(
        hop_height_mm=m.hop_height * 1e3, E_d_mJ=m.standby_E_d * 1e3,
        extra_E_d_mJ=m.extra_E_d * 1e3, extra_E_d_pct=extra_pct, delay_ms=m.delay * 1e3,
        recovery_steps=m.recovery_steps, coh=m.coh, speed_m_s=m.speed, cot=m.cot,
        cycle_std_ms=m.cycle_std * 1e3, encounters=m.failures.encounters,
        slip=m.failures.slip, stop=m.failures.stop, failed=m.failures.failed,
        n_steps=m.n_steps, failure=failure or (m.failure or ""),
    )
    return row


def run(cfg: ScenarioConfig, out_dir, prefix: str = "") -> tuple[TrialRecord, TrialMetrics]:
    """Simulate ``cfg`` and write ``trace.csv``, ``steps.csv`` and ``metrics.csv``.

    A simulation abort (fall, bottoming out) still writes all three files; the
    ``failure`` column of the metrics row names the cause.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record, metrics = run_trial(cfg)
    write_csv(out / f"{prefix}trace.csv", PUBLIC_TRACE_COLUMNS, record.public_trace())
    write_csv(out / f"{prefix}steps.csv", STEPS_COLUMNS, _step_rows(record))
    row = metrics_row(cfg, metrics)
    write_csv(out / f"{prefix}metrics.csv", METRICS_COLUMNS, [[row[c] for c in METRICS_COLUMNS]])
    save_config(cfg, out / f"{prefix}config.json")
    return record, metrics


# -- sweeps ------------------------------------------------------------------------

def _sweep_worker(args) -> TrialResult:
    key, cfg, protocol = args
    try:
        _, m = run_trial(cfg)
        return TrialResult(key, metrics_row(cfg, m, protocol, key[0]))
    except (SimulationError, ValueError, FloatingPointError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return TrialResult(key, metrics_row(cfg, None, protocol, key[0], failure=msg), error=msg)


def _nanmean(vals) -> float:
    arr = np.array([np.nan if v is None else float(v) for v in vals], dtype=float)
    if arr.size == 0 or np.all(np.isnan(arr)):
        return math.nan
    return float(np.nanmean(arr))


def cell_means(spec: SweepSpec, rows: list) -> list:
    """Per-(level, slack) aggregate rows; failed trials are counted, not averaged."""
    out = []
    for lv, sl in spec.cells():
        cell = [r for r in rows if r["level"] == lv and r["slack_mm"] == round(sl * 1e3, 6)]
        ok = [r for r in cell if not r["failure"]]
        agg = {"protocol": spec.protocol, "level": lv, "slack_mm": round(sl * 1e3, 6),
               "n_trials": len(cell), "n_failed_trials": len(cell) - len(ok)}
        for c in CELL_COLUMNS[5:]:
            if c in _CELL_SUMS:
                agg[c] = int(sum(int(r[c]) for r in cell if r[c] == r[c]))
            else:
                agg[c] = _nanmean([r[c] for r in ok])
        out.append(agg)
    return out


def sweep(spec: SweepSpec, out_dir=None, jobs: int = 1) -> tuple[list, list]:
    """Run every trial of ``spec``; returns (trial rows, cell rows).

    Trials run on a pool of ``jobs`` worker processes and come back in the
    deterministic order of :meth:`SweepSpec.trials`.  A failing trial becomes a
    row with its error in ``failure`` and the sweep carries on.
    """
    work = [(key, cfg, spec.protocol) for key, cfg in spec.trials()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, work, chunksize=1))
    else:
        results = [_sweep_worker(w) for w in work]
    rows = [r.row for r in results]
    cells = cell_means(spec, rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "metrics.csv", METRICS_COLUMNS, [[r[c] for c in METRICS_COLUMNS] for r in rows])
        write_csv(out / "cells.csv", CELL_COLUMNS, [[r[c] for c in CELL_COLUMNS] for r in cells])
    for r in results:
        if r.error:
            log.warning("trial %s failed: %s", r.key, r.error)
    return rows, cells


# -- calibration -------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationTargets:
    """Standby damper energy per slack [m -> J] and flat forward CoT at one slack."""

    standby_E_d: dict = field(default_factory=lambda: {0.010: 0.001, 0.006: 0.029,
                                                       0.003: 0.086, 0.0: 0.152})
    cot: float = 1.01
    cot_slack: float = 0.010

    def __post_init__(self):
        if not self.standby_E_d:
            raise ConfigError("standby_E_d_mJ", "needs at least one slack")
        for s, e in self.standby_E_d.items():
            if s < 0.0 or not e > 0.0:
                raise ConfigError("standby_E_d_mJ", "slacks must be >= 0 and energies > 0")
        if not self.cot > 0.0:
            raise ConfigError("cot", "must be > 0")


DEFAULT_TARGETS = CalibrationTargets()


def load_targets(path) -> CalibrationTargets:
    """Read targets from JSON: ``{"standby_E_d_mJ": {"10": 1, ...}, "cot": 1.01, "cot_slack_mm": 10}``."""
    data = json.loads(Path(path).read_text())
    allowed = {"standby_E_d_mJ", "cot", "cot_slack_mm"}
    for k in data:
        if k not in allowed:
            raise ConfigError(k, "unknown field")
    kw = {}
    if "standby_E_d_mJ" in data:
        kw["standby_E_d"] = {float(k) * 1e-3: float(v) * 1e-3 for k, v in data["standby_E_d_mJ"].items()}
    if "cot" in data:
        kw["cot"] = float(data["cot"])
    if "cot_slack_mm" in data:
        kw["cot_slack"] = float(data["cot_slack_mm"]) * 1e-3
    return CalibrationTargets(**kw)


@dataclass
class CalibrationResult:
    c: float
    k_rec: float
    R: float
    standby_E_d: dict
    cot: float
    residuals: dict
    objective: float
    evaluations: int
    converged: bool
    seconds: float

    def overlay(self) -> dict:
        return {"damper": {"c": self.c, "k_rec": self.k_rec}, "motor": {"R": self.R}}


CAL_DURATION = 9.0  # s of vertical hopping per standby evaluation
CAL_WINDOW = 5      # trailing steps averaged as the standby value


def standby_energies(base: ScenarioConfig, slacks, c: float, k_rec: float) -> dict:
    """Mean damper energy per stance over the last steps of unperturbed hopping."""
    out = {}
    for s in slacks:
        cfg = replace(base, duration=CAL_DURATION,
                      damper=replace(base.damper, c=c, k_rec=k_rec, slack=s))
        rec = simulate(cfg)
        e = [st.E_d for st in rec.steps[-CAL_WINDOW:]]
        out[s] = float(np.mean(e)) if e and rec.failure is None else math.inf
    return out


def standby_objective(energies: dict, targets: dict) -> float:
    """Sum of squared relative errors."""
    return float(sum(((energies[s] - e) / e) ** 2 for s, e in targets.items()))


def _golden(f, lo: float, hi: float, tol: float, max_iter: int):
    """Golden-section minimum of ``f`` on [lo, hi]; returns (x, f(x), evaluations)."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    n = 2
    while b - a > tol and n < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        n += 1
    return (x1, f1, n) if f1 <= f2 else (x2, f2, n)


def _forward_cot(base: ScenarioConfig, slack: float, R: float, c: float, k_rec: float) -> float:
    cfg = replace(base, damper=replace(base.damper, c=c, k_rec=k_rec, slack=slack),
                  motor=replace(base.motor, R=R))
    _, m = run_trial(cfg)
    return m.cot


def calibrate(targets: CalibrationTargets = DEFAULT_TARGETS,
              vertical: Optional[ScenarioConfig] = None,
              forward: Optional[ScenarioConfig] = None,
              rounds: int = 4, log_tol: float = 0.005, max_evals: int = 200,
              c_bounds=(40.0, 800.0), k_rec_bounds=(100.0, 10000.0)) -> CalibrationResult:
    """Fit damper ``c`` and ``k_rec`` to standby energies, then ``R`` to the CoT target.

    ``c`` and ``k_rec`` are refined by alternating golden-section searches in
    log space.  A candidate is only accepted when it lowers the objective, so
    targets that the current constants already reproduce leave them unchanged.
    ``R`` does not influence the motion, so CoT is affine in ``R`` and is solved
    from two evaluations.  Running out of ``max_evals`` returns the best point
    found with ``converged=False``.
    """
    t0 = time.perf_counter()
    vertical = vertical or default_vertical()
    forward = forward or default_forward(revolutions=6.0)
    slacks = sorted(targets.standby_E_d, reverse=True)
    n_eval = 0

    def obj(c, k):
        nonlocal n_eval
        n_eval += 1
        return standby_objective(standby_energies(vertical, slacks, c, k), targets.standby_E_d)

    c, k = vertical.damper.c, vertical.damper.k_rec
    best = obj(c, k)
    converged = best < 1e-12
    for _ in range(rounds if not converged else 0):
        prev = best
        budget = max_evals - n_eval
        if budget < 4:
            break
        lc, fc, _ = _golden(lambda u: obj(math.exp(u), k), math.log(c_bounds[0]),
                            math.log(c_bounds[1]), log_tol, budget // 2)
        if fc < best:
            c, best = math.exp(lc), fc
        budget = max_evals - n_eval
        if budget < 4:
            break
        lk, fk, _ = _golden(lambda u: obj(c, math.exp(u)), math.log(k_rec_bounds[0]),
                            math.log(k_rec_bounds[1]), log_tol, budget)
        if fk < best:
            k, best = math.exp(lk), fk
        if prev - best <= 1e-3 * max(prev, 1e-12):
            converged = True
            break
    if not converged:
        log.warning("calibration stopped after %d evaluations; returning best point", n_eval)

    energies = standby_energies(vertical, slacks, c, k)
    a = _forward_cot(forward, targets.cot_slack, 0.0, c, k)
    b = _forward_cot(forward, targets.cot_slack, 1.0, c, k) - a
    R = max(0.0, (targets.cot - a) / b) if b > 0.0 and math.isfinite(a) else forward.motor.R
    if b > 0.0 and (targets.cot - a) / b < 0.0:
        log.warning("CoT target %.3g is below the R = 0 floor %.3g; R clamped to 0", targets.cot, a)
    cot_fit = a + b * R
    residuals = {f"E_d@{s * 1e3:g}mm": (energies[s] - e) / e for s, e in targets.standby_E_d.items()}
    residuals[f"cot@{targets.cot_slack * 1e3:g}mm"] = (cot_fit - targets.cot) / targets.cot
    return CalibrationResult(c=c, k_rec=k, R=R, standby_E_d=energies, cot=cot_fit,
                             residuals=residuals, objective=best, evaluations=n_eval,
                             converged=converged, seconds=time.perf_counter() - t0)


def apply_overlay(cfg: ScenarioConfig, overlay: dict) -> ScenarioConfig:
    """Replace damper and motor constants with the values in a calibration overlay."""
    for k in overlay:
        if k not in ("damper", "motor"):
            raise ConfigError(k, "overlay may only touch damper and motor")
    d = overlay.get("damper", {})
    m = overlay.get("motor", {})
    return replace(cfg, damper=replace(cfg.damper, **d), motor=replace(cfg.motor, **m))


def write_calibration(result: CalibrationResult, out_dir) -> None:
    """Write the overlay, calibrated full configs and a residual report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "calibration_overlay.json").write_text(json.dumps(result.overlay(), indent=2) + "\n")
    save_config(apply_overlay(default_vertical(), result.overlay()), out / "vertical.json")
    save_config(apply_overlay(default_forward(), result.overlay()), out / "forward.json")
    report = {
        "c": result.c, "k_rec": result.k_rec, "R": result.R,
        "standby_E_d_mJ": {f"{s * 1e3:g}": e * 1e3 for s, e in result.standby_E_d.items()},
        "cot": result.cot, "residuals": result.residuals, "objective": result.objective,
        "evaluations": result.evaluations, "converged": result.converged,
        "seconds": round(result.seconds, 2),
    }
    (out / "calibration_report.json").write_text(json.dumps(report, indent=2) + "\n")


def config_json(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"
