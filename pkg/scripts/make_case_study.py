"""Write a synthetic year shaped like the two-village case study.

The real community data is not public. The output has the same topology,
tariffs and sizes, with generated weather, PV and demand.
"""

import argparse

from tees.synthetic import write_case_study

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="case_study")
    ap.add_argument("--seed", type=int, default=2023)
    ap.add_argument("--dt", type=float, default=5.0, help="step in minutes")
    args = ap.parse_args()
    print(write_case_study(args.out, seed=args.seed, dt_minutes=args.dt))
