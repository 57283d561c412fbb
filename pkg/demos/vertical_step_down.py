"""Slack tendon damper on a vertically hopping leg.

Hops the leg at each slack setting on flat ground, then drops the ground by
15% of leg length mid-trial.  The printout shows how much energy the damper
takes out during steady hopping and during the perturbed stance, and how many
steps the leg needs to settle back to its reference hop height.

Run:  python demos/vertical_step_down.py [out_dir]
"""
import sys
from pathlib import Path

from slackhop import harness
from slackhop.config import default_vertical
from slackhop.plots import plot_apex, plot_workloop
from slackhop.terrain import TerrainProfile


def main(out_dir="demo_out/vertical"):
    out = Path(out_dir)
    print(f"{'slack':>6} {'hop':>7} {'standby':>8} {'extra':>8} {'delay':>7} {'recovery':>8}")
    for slack in (0.010, 0.006, 0.003, 0.0):
        cfg = default_vertical(terrain=TerrainProfile.step_down(0.15), duration=20.0,
                               removal_after=10.0).with_slack(slack)
        record, m = harness.run(cfg, out / f"slack_{slack * 1e3:g}mm")
        print(f"{slack * 1e3:4.0f}mm {m.hop_height * 1e3:5.1f}mm {m.standby_E_d * 1e3:6.1f}mJ "
              f"{m.extra_E_d * 1e3:6.1f}mJ {m.delay * 1e3:5.1f}ms {m.recovery_steps!s:>8}")
        # damper work loop of the perturbed stance
        j = record.perturb_steps[0]
        s = record.steps[j]
        t = record.column("t")
        sl = (t >= s.touchdown_t) & (t <= s.liftoff_t)
        plot_workloop(record.column("piston_pos")[sl], record.column("f_damper")[sl],
                      out / f"workloop_{slack * 1e3:g}mm.svg", label=f"{slack * 1e3:g} mm slack")
        plot_apex([st.step for st in record.steps], [st.apex for st in record.steps],
                  out / f"apex_{slack * 1e3:g}mm.svg")
    print(f"traces, step tables and figures written to {out}/")


if __name__ == "__main__":
    main(*sys.argv[1:])
