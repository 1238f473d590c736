#!/usr/bin/env python3
"""Sweep the latent dimension k from 10 to 100 on MovieLens.

    python scripts/sweep_k.py [--seeds 1,2,3] [--out out/k-sweep]

Produces sweep.csv (param,value,seed,auc plus per-value medians), ready
for external plotting of AUC against vector length.
"""

import argparse
import logging
import sys
from pathlib import Path

from recmia.pipeline import ExperimentConfig, run_sweep

REPO_ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="1,2,3")
    parser.add_argument("--out", default="out/k-sweep")
    parser.add_argument(
        "--data", default=str(REPO_ROOT / "data" / "ml-latest-small" / "ratings.csv")
    )
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    if not Path(args.data).is_file():
        print(f"{args.data} not found; run scripts/fetch_movielens.py first", file=sys.stderr)
        return 1
    base = ExperimentConfig(data_path=args.data, output_dir=args.out)
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = run_sweep(base, "k", list(range(10, 101, 10)), seeds)
    print(f"{len(rows)} runs -> {args.out}/sweep.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
