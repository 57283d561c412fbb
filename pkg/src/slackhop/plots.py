"""SVG figures: damper work loops, hip phase portraits and apex-per-step series."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["KINDS", "read_table", "plot_workloop", "plot_phase", "plot_apex", "plot_file"]

KINDS = ("workloop", "phase", "apex")

# Fixed metadata keeps repeated renders byte-identical.
_SVG_META = {"Date": None, "Creator": "slackhop"}


class PlotError(ValueError):
    """Input file does not have the columns the requested plot needs."""


def read_table(path) -> dict:
    """Read a CSV with a header row into a dict of float columns."""
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=float, encoding="utf-8")
    except (OSError, ValueError) as exc:
        raise PlotError(f"{path}: cannot read CSV ({exc})") from None
    if data.dtype.names is None:
        raise PlotError(f"{path}: missing header row")
    data = np.atleast_1d(data)
    return {n: np.asarray(data[n], dtype=float) for n in data.dtype.names}


def _need(table: dict, cols, path) -> None:
    missing = [c for c in cols if c not in table]
    if missing:
        raise PlotError(f"{path}: missing columns {missing}")


def _save(fig, out) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return out


def plot_workloop(piston_pos, force, out, label: str = "") -> Path:
    """Damper force against piston position; an empty input gives empty axes."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(np.asarray(piston_pos) * 1e3, np.asarray(force), lw=1.0, label=label or None)
    ax.set_xlabel("piston position [mm]")
    ax.set_ylabel("damper force [N]")
    if label:
        ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, out)


def plot_phase(y, vy, out) -> Path:
    """Hip vertical velocity against hip height."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(np.asarray(y) * 1e3, np.asarray(vy), lw=0.6)
    ax.set_xlabel("hip height [mm]")
    ax.set_ylabel("hip vertical velocity [m/s]")
    fig.tight_layout()
    return _save(fig, out)


def plot_apex(step, apex, out) -> Path:
    """Apex height per step."""
    fig, ax = plt.subplots(figsize=(5.0, 3.0))
    ax.plot(np.asarray(step), np.asarray(apex) * 1e3, marker="o", ms=2.5, lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("apex height [mm]")
    fig.tight_layout()
    return _save(fig, out)


def _stance_mask(table: dict) -> np.ndarray:
    return table["grf"] > 0.5


def plot_file(path, kind: str, out_dir) -> Path:
    """Render ``kind`` from a trace CSV (any kind) or a steps CSV (``apex`` only)."""
    if kind not in KINDS:
        raise PlotError(f"kind must be one of {KINDS}")
    table = read_table(path)
    out = Path(out_dir) / f"{Path(path).stem}_{kind}.svg"
    if kind == "apex":
        if "apex" in table:
            _need(table, ("step",), path)
            return plot_apex(table["step"], table["apex"], out)
        _need(table, ("t", "x", "y", "grf", "f_spring", "f_damper", "piston_pos"), path)
        from .analysis import steps_from_trace

        st = steps_from_trace(table["t"], table["x"], table["y"], table["grf"], table["f_spring"],
                              table["f_damper"], table["piston_pos"])
        return plot_apex([s.step for s in st], [s.apex for s in st], out)
    if kind == "phase":
        _need(table, ("y", "vy"), path)
        return plot_phase(table["y"], table["vy"], out)
    _need(table, ("piston_pos", "f_damper", "grf"), path)
    on = _stance_mask(table)
    edges = np.flatnonzero(np.diff(on.astype(int)) == 1) + 1
    if edges.size >= 2:
        # last complete stance
        i0 = edges[-2]
        i1 = i0 + int(np.argmin(on[i0:]))
        sl = slice(i0, i1 + 1)
    else:
        sl = slice(0, 0)
    return plot_workloop(table["piston_pos"][sl], table["f_damper"][sl], out)
