"""Regenerate the small bundled scenario (two winter days, eight houses)."""

import argparse
from pathlib import Path

from tees.synthetic import write_small_scenario

DEFAULT = Path(__file__).resolve().parents[1] / "src" / "tees" / "data" / "synthetic"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(DEFAULT))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    print(write_small_scenario(args.out, seed=args.seed))
