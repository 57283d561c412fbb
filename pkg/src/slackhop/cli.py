"""Command-line entry point: ``python -m slackhop <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import steps_from_trace
from .config import ConfigError, load_config, load_sweep
from .harness import (
    DEFAULT_TARGETS,
    STEPS_COLUMNS,
    calibrate,
    load_targets,
    run,
    sweep,
    write_calibration,
    write_csv,
)
from .plots import KINDS, PlotError, plot_file, read_table

log = logging.getLogger("slackhop")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--dt", type=float, default=None, help="override the integrator step [s]")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slackhop", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("config")
    _common(p)
    p = sub.add_parser("sweep", help="run a slack x perturbation grid")
    p.add_argument("spec")
    _common(p)
    p = sub.add_parser("calibrate", help="fit damper and motor constants")
    p.add_argument("--targets", default=None, help="JSON targets file")
    _common(p)
    p = sub.add_parser("analyze", help="per-step summary of a saved trace")
    p.add_argument("trace")
    p.add_argument("--l0", type=float, default=0.310, help="rest leg length [m]")
    _common(p)
    p = sub.add_parser("plot", help="render an SVG figure")
    p.add_argument("input")
    p.add_argument("--kind", choices=KINDS, required=True)
    _common(p)
    return ap


def _override(cfg, args):
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.dt is not None:
        cfg = replace(cfg, integrator=replace(cfg.integrator, dt=args.dt))
    return cfg


def _cmd_run(args) -> int:
    cfg = _override(load_config(args.config), args)
    record, metrics = run(cfg, args.out)
    print(f"{cfg.rig}: {metrics.n_steps} steps, failure={record.failure or 'none'} -> {args.out}")
    return 0 if record.failure is None else 3


def _cmd_sweep(args) -> int:
    spec = load_sweep(args.spec)
    spec = replace(spec, base=_override(spec.base, args))
    rows, cells = sweep(spec, args.out, jobs=max(1, args.jobs))
    n_fail = sum(1 for r in rows if r["failure"])
    print(f"{spec.protocol}: {len(rows)} trials, {len(cells)} cells, {n_fail} failed -> {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    targets = load_targets(args.targets) if args.targets else DEFAULT_TARGETS
    result = calibrate(targets)
    write_calibration(result, args.out)
    print(f"c = {result.c:.4g} N s/m, k_rec = {result.k_rec:.4g} N/m, R = {result.R:.4g} ohm")
    for k, v in result.residuals.items():
        print(f"  residual {k}: {100 * v:+.1f}%")
    print(f"  {result.evaluations} evaluations in {result.seconds:.1f} s"
          + ("" if result.converged else " (not converged)"))
    return 0


def _cmd_analyze(args) -> int:
    tab = read_table(args.trace)
    need = ("t", "x", "y", "grf", "f_spring", "f_damper", "piston_pos", "p_elec")
    missing = [c for c in need if c not in tab]
    if missing:
        raise PlotError(f"{args.trace}: missing columns {missing}")
    steps = steps_from_trace(tab["t"], tab["x"], tab["y"], tab["grf"], tab["f_spring"],
                             tab["f_damper"], tab["piston_pos"], l0=args.l0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "analyzed_steps.csv", STEPS_COLUMNS,
              [(s.step, s.touchdown_t, s.liftoff_t, s.apex, s.E_d, s.delay_ms, s.slip, s.stop)
               for s in steps])
    t = tab["t"]
    e_elec = float(((tab["p_elec"][1:] + tab["p_elec"][:-1]) * 0.5 * (t[1:] - t[:-1])).sum())
    summary = {"n_steps": len(steps), "duration_s": float(t[-1] - t[0]), "E_elec_J": e_elec,
               "distance_m": float(tab["x"][-1] - tab["x"][0])}
    (out / "analysis.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{len(steps)} stances, {e_elec:.3f} J electrical -> {out}")
    return 0


def _cmd_plot(args) -> int:
    path = plot_file(args.input, args.kind, args.out)
    print(path)
    return 0


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "calibrate": _cmd_calibrate,
             "analyze": _cmd_analyze, "plot": _cmd_plot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, PlotError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
