"""Command-line interface.

Subcommands:
  simulate    write one simulated run (truth + labeled measurements)
  run         run the filter once and write per-step estimates
  bound       compute the PEB/LEB series only
  experiment  full Monte-Carlo study (rmse/gospa/bounds/timing + metadata)
  report      render figures from an experiment output directory
  version     print the package version

Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ExperimentConfig, parse_config
from .errors import ConfigError, EkphdError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH", help="JSON config file")
    sub.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    sub.add_argument("--jobs", type=int, metavar="N", help="worker processes for MC runs")
    sub.add_argument("--out", metavar="DIR", help="output directory")
    sub.add_argument("--mode", choices=["slam", "los-only"], help="filter mode")
    sub.add_argument("--mc-runs", type=int, metavar="N", help="override Monte-Carlo run count")
    sub.add_argument("--cycles", type=int, metavar="N", help="override cycle count")


def _resolve_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.out is not None:
        cfg.out_dir = args.out
    if args.mode is not None:
        cfg.mode = args.mode
    if getattr(args, "mc_runs", None) is not None:
        cfg.mc_runs = args.mc_runs
    if getattr(args, "cycles", None) is not None:
        cfg.cycles = args.cycles
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ekphd-slam", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "run", "bound", "experiment"):
        _add_common(sub.add_parser(name))
    report = sub.add_parser("report")
    report.add_argument("--dir", required=True, metavar="DIR", help="experiment output directory")
    sub.add_parser("version")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "version":
            print(__version__)
            return 0
        if args.command == "report":
            from .plots import render_report

            written = render_report(args.dir)
            for path in written:
                print(path)
            return 0
        cfg = _resolve_config(args)
        from . import experiment as exp

        if args.command == "simulate":
            summary = exp.write_simulation(cfg)
        elif args.command == "run":
            summary = exp.write_single_run(cfg)
        elif args.command == "bound":
            summary = exp.write_bounds(cfg)
        else:
            summary = exp.run_experiment(cfg)
        print(f"wrote {', '.join(summary['outputs'])} to {cfg.out_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (EkphdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
