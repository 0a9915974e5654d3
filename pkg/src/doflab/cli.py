"""Command-line entry point.

Subcommands: sweep, asymptotics, decompose, reproduce. Exit codes: 0 on
success, 2 for configuration problems, 3 for solver or estimation failures.
"""

from __future__ import annotations

import argparse
import sys

from .asymptotics import SolverError
from .config import ConfigError, load_config
from .estimator import EstimationError
from .predictors import ConvergenceError
from .runner import FIGURES, reproduce, run_config

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_common(parser):
    parser.add_argument("--config", help="path to a YAML experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--reps", type=int, default=None, help="override the replication count")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (DOFLAB_MAX_WORKERS caps this)")
    parser.add_argument("--out", default=None, help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doflab",
        description="Measure random-X degrees of freedom of prediction models "
                    "by Monte Carlo, and compare against deterministic "
                    "proportional-asymptotics theory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("sweep", "Monte Carlo df sweep over a predictor or feature grid"),
        ("asymptotics", "deterministic theory curves, optionally paired with MC"),
        ("decompose", "covariate-shift scenario grid and Shapley attribution"),
    ):
        cmd = sub.add_parser(name, help=desc)
        _add_common(cmd)
    rep = sub.add_parser("reproduce", help="emit the data bundle behind a known figure")
    rep.add_argument("--figure", default=None,
                     help=f"figure id; one of {sorted(FIGURES)}")
    _add_common(rep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce" and args.figure is not None:
            outputs = reproduce(args.figure, seed=args.seed, reps=args.reps,
                                out=args.out, workers=args.workers)
        else:
            if args.config is None:
                print("error: --config is required", file=sys.stderr)
                return EXIT_CONFIG
            cfg = load_config(args.config)
            if cfg["kind"] != args.command:
                print(f"error: config kind {cfg['kind']!r} does not match "
                      f"subcommand {args.command!r}", file=sys.stderr)
                return EXIT_CONFIG
            outputs = run_config(cfg, seed=args.seed, reps=args.reps,
                                 out=args.out, workers=args.workers)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationError, SolverError, ConvergenceError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
