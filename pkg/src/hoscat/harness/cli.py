"""Command line: ``hoscat list | run <scenario> [--config FILE] [--out DIR] | plot <csv>``."""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError
from .config import read_config
from .plot import plot_csv
from .runner import make_config, run_scenario
from .scenarios import list_scenarios


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hoscat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="show the scenario registry")
    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("scenario")
    run.add_argument("--config", help="JSON config; unset keys take scenario defaults")
    run.add_argument("--out", help="output directory for CSV, summary and plots")
    run.add_argument("--plots", action="store_true", help="render PNG plots from the CSV tables")
    plot = sub.add_parser("plot", help="render a PNG from a harness CSV")
    plot.add_argument("csv")
    plot.add_argument("--out")
    args = parser.parse_args(argv)

    if args.command == "list":
        for name, statement in list_scenarios():
            print(f"{name:24s} {statement}")
        return 0
    if args.command == "plot":
        print(plot_csv(args.csv, args.out))
        return 0
    try:
        overrides = read_config(args.config) if args.config else {}
        overrides.setdefault("scenario", args.scenario)
        if args.out:
            overrides["out_dir"] = args.out
        if args.plots:
            overrides["plots"] = True
        cfg = make_config(args.scenario, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    summary = run_scenario(cfg)
    print(summary.report())
    return 0 if summary.passed else 1


if __name__ == "__main__":
    sys.exit(main())
