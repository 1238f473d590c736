"""Command line entry points: ``recmia run`` and ``recmia sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import Sequence

from .pipeline import (
    SWEEP_PARAMS,
    ConfigError,
    StageError,
    load_config,
    run_experiment,
    run_sweep,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--out", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recmia",
        description="Membership inference attack against a latent-factor recommender.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and write report.json/roc.csv")
    _add_common(run_p)

    sweep_p = sub.add_parser("sweep", help="run a hyperparameter sweep and write sweep.csv")
    _add_common(sweep_p)
    sweep_p.add_argument(
        "--param", required=True, choices=SWEEP_PARAMS, help="which knob to sweep"
    )
    sweep_p.add_argument(
        "--values", required=True, help="comma-separated values, e.g. 10,30,50,100"
    )
    sweep_p.add_argument(
        "--seeds", required=True, help="comma-separated master seeds, e.g. 1,2,3"
    )
    return parser


def _parse_values(raw: str, param: str) -> list[float]:
    try:
        values = [float(v) for v in raw.split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {raw!r}")
    if param in ("k", "N") and any(not v.is_integer() for v in values):
        raise ConfigError(f"--values for {param} must be integers, got {raw!r}")
    return values


def _parse_seeds(raw: str) -> list[int]:
    try:
        return [int(s) for s in raw.split(",") if s != ""]
    except ValueError:
        raise ConfigError(f"--seeds must be comma-separated integers, got {raw!r}")


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.out is not None:
            config = replace(config, output_dir=args.out)
        if args.command == "run":
            report = run_experiment(config)
            print(f"auc={report.auc:.6f} -> {config.output_dir}")
        else:
            values = _parse_values(args.values, args.param)
            seeds = _parse_seeds(args.seeds)
            rows = run_sweep(config, args.param, values, seeds)
            print(f"{len(rows)} sweep runs -> {config.output_dir}")
    except (ConfigError, StageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
