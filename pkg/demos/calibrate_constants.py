"""Fit the damper and motor constants to standby energies and a CoT target.

The damper coefficient and recoil stiffness are fitted so that steady vertical
hopping dissipates the target energy at each slack; the winding resistance is
then solved so the forward rig matches the target cost of transport.

Run:  python demos/calibrate_constants.py [out_dir]
"""
import sys

from slackhop import harness


def main(out_dir="demo_out/calibration"):
    res = harness.calibrate()
    harness.write_calibration(res, out_dir)
    print(f"c = {res.c:.1f} N s/m, k_rec = {res.k_rec:.0f} N/m, R = {res.R:.3f} ohm "
          f"({res.evaluations} evaluations, {res.seconds:.0f} s)")
    for slack, e in sorted(res.standby_E_d.items(), reverse=True):
        target = harness.DEFAULT_TARGETS.standby_E_d[slack]
        print(f"  {slack * 1e3:4.0f} mm slack: {e * 1e3:6.1f} mJ (target {target * 1e3:.0f} mJ)")
    print(f"overlay and updated configs written to {out_dir}/")


if __name__ == "__main__":
    main(*sys.argv[1:])
