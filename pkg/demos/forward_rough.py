"""Forward hopping on a boom over flat and rough ground.

Runs one trial per slack setting at each rough-terrain level and reports
speed, cost of transport and the number of slips and stops.

Run:  python demos/forward_rough.py [out_dir]
"""
import sys
from pathlib import Path

from slackhop import harness
from slackhop.config import default_forward
from slackhop.terrain import TerrainProfile


def main(out_dir="demo_out/forward"):
    out = Path(out_dir)
    print(f"{'level':>6} {'slack':>6} {'speed':>9} {'CoT':>6} {'slip':>5} {'stop':>5}")
    for level in (0.0, 0.010):
        terrain = TerrainProfile.rough(level)
        for slack in (0.010, 0.0):
            cfg = default_forward(terrain=terrain, revolutions=3.0).with_slack(slack)
            _, m = harness.run(cfg, out / f"rough_{level * 1e3:g}mm_slack_{slack * 1e3:g}mm")
            print(f"{level * 1e3:4.0f}mm {slack * 1e3:4.0f}mm {m.speed:5.2f}m/s {m.cot:6.2f} "
                  f"{m.failures.slip:5d} {m.failures.stop:5d}")


if __name__ == "__main__":
    main(*sys.argv[1:])
