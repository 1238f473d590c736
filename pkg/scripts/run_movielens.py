#!/usr/bin/env python3
"""Run the attack experiment on MovieLens with the default configuration.

    python scripts/run_movielens.py [--seed 1] [--out out/movielens]

Expects data/ml-latest-small/ratings.csv (see scripts/fetch_movielens.py).
"""

import argparse
import logging
import sys
from pathlib import Path

from recmia.pipeline import ExperimentConfig, run_experiment

REPO_ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="out/movielens")
    parser.add_argument(
        "--data", default=str(REPO_ROOT / "data" / "ml-latest-small" / "ratings.csv")
    )
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    if not Path(args.data).is_file():
        print(f"{args.data} not found; run scripts/fetch_movielens.py first", file=sys.stderr)
        return 1
    report = run_experiment(
        ExperimentConfig(data_path=args.data, seed=args.seed, output_dir=args.out)
    )
    print(
        f"seed={args.seed} auc={report.auc:.4f} "
        f"({report.wall_clock_seconds:.1f}s, artifacts in {args.out})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
