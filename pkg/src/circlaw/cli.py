"""Command line interface.

Subcommands: circlaw, sparse, lsv, smallball, gap, invlo, esd, rate.
Exit codes: 0 success, 1 config/usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import pipeline
from .pipeline import ConfigError, ExperimentConfig


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


_RUNNERS = {
    "circlaw": pipeline.run_circlaw,
    "sparse": pipeline.run_sparse_circlaw,
    "lsv": pipeline.run_lsv,
    "smallball": pipeline.run_smallball,
    "gap": pipeline.run_gap,
    "invlo": pipeline.run_invlo,
    "esd": pipeline.run_esd,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="circlaw",
                     description="Circular-law spectral laboratory experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("circlaw", "dense circular-law convergence run"),
        ("sparse", "sparse circular-law run (needs sparse.alpha)"),
        ("lsv", "least-singular-value tail experiment"),
        ("smallball", "concentration probability comparison battery"),
        ("gap", "forward Littlewood-Offord GAP family"),
        ("invlo", "inverse Littlewood-Offord structure search"),
        ("esd", "dump one eigenvalue cloud"),
    ]:
        p = sub.add_parser(name, help=help_text, parents=[_common_flags()])
    rate = sub.add_parser("rate", help="fit the convergence rate from a results CSV")
    rate.add_argument("csv", help="CSV produced by circlaw/sparse runs")
    rate.add_argument("--quiet", action="store_true")
    return parser


def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value config file")
    common.add_argument("--seed", type=int, metavar="U64", help="override root seed")
    common.add_argument("--out", metavar="PATH", help="override output CSV path")
    common.add_argument("--trials", type=int, metavar="N", help="override trial count")
    common.add_argument("--jobs", type=int, metavar="N", help="concurrent trials")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    return common


def _load(args) -> ExperimentConfig:
    if args.config:
        config = pipeline.load_config(args.config)
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
        config.__post_init__()
    if args.out is not None:
        config.out = args.out
    if args.jobs is not None:
        config.jobs = args.jobs
    config.quiet = bool(args.quiet)
    return config


def cli_main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "rate":
            eta, r2 = pipeline.fit_rate(args.csv)
            print(f"eta_prime={eta:.6g} r_squared={r2:.6g}")
            return 0
        config = _load(args)
        runner = _RUNNERS[args.command]
        path = runner(config)
        if not config.quiet:
            print(f"wrote {path}")
        return 0
    except (ConfigError, pipeline.InsufficientDataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
