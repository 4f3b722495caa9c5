"""Command-line front end: run a power sweep and write the results as CSV."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config_io import load_config
from .exceptions import ConfigError
from .harness import parse_points, run_sweep, write_csv

_DEFAULT_POINTS = {
    "dl_power": "-10:27:1",
    "ul_power": "13:20:7",  # the two reference uplink powers
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdujcas",
        description="Concurrent downlink-sensing / uplink-communication link simulator",
    )
    parser.add_argument("--config", default="default", help="config file path or 'default'")
    parser.add_argument("--case", type=int, choices=(1, 2, 3), help="receiver case to run")
    parser.add_argument(
        "--sweep", choices=("dl_power", "ul_power"), default="dl_power", help="power axis to sweep"
    )
    parser.add_argument("--points", help="sweep grid 'a:b:step' in dBm (inclusive)")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials per sweep point")
    parser.add_argument("--seed", type=int, help="master seed for the trial streams")
    parser.add_argument("--out", default="results.csv", help="output CSV path")
    parser.add_argument("--qam", type=int, choices=(4, 16, 64), help="QAM order")
    parser.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        points = parse_points(args.points or _DEFAULT_POINTS[args.sweep])
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2

    try:
        config = load_config(args.config)
        overrides = {}
        if args.case is not None:
            overrides["case"] = args.case
        if args.qam is not None:
            overrides["qam_order"] = args.qam
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if overrides:
            config = replace(config, **overrides)
        config.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    try:
        sweep = run_sweep(config, args.sweep, points, config.trials, workers=args.workers)
        write_csv(sweep, args.out)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
