"""Run all seven pathways on the synthetic case study and print the ranking.

A full year at 5 minutes is 52 weekly chunks per pathway; pass --from/--to
to restrict the window, e.g. a January week takes a few minutes.
"""

import argparse
import sys
from pathlib import Path

from tees.cli import main
from tees.synthetic import write_case_study

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="case_study")
    ap.add_argument("--out", default="case_study_out")
    ap.add_argument("--from", dest="from_", default="2023-01-09T00:00:00+00:00")
    ap.add_argument("--to", default="2023-01-16T00:00:00+00:00")
    ap.add_argument("--dt", type=float, default=60.0, help="resample step in minutes")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    scenario = Path(args.data) / "scenario.json"
    if not scenario.exists():
        write_case_study(args.data)
    argv = ["run", "--scenario", str(scenario), "--out", args.out, "--workers", str(args.workers),
            "--dt", str(args.dt)]
    if args.from_:
        argv += ["--from", args.from_]
    if args.to:
        argv += ["--to", args.to]
    code = main(argv)
    if code == 0:
        main(["compare", "--criteria", str(Path(args.out) / "criteria.csv")])
    sys.exit(code)
