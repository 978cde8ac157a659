"""Sweep heat-pump cutoff temperature, indoor setpoint and PV scale on a scenario."""

import argparse
import sys

from tees.cli import main

GRIDS = {
    "cutoff_temp": "-30,-25,-20,-15",
    "indoor_setpoint": "18,19,20,21,22",
    "pv_scale": "1,1.5,2,2.5",
}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", required=True)
    ap.add_argument("--out", default="sensitivity_out")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--dt", type=float)
    args = ap.parse_args()
    codes = []
    for name, grid in GRIDS.items():
        argv = ["sensitivity", "--scenario", args.scenario, "--out", args.out,
                "--parameter", name, "--grid", grid, "--workers", str(args.workers)]
        if args.dt:
            argv += ["--dt", str(args.dt)]
        codes.append(main(argv))
    sys.exit(max(codes))
