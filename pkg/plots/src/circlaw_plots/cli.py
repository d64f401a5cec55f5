"""CLI: plots <kind> <csv...> --out FILE [--force] [--title TEXT]."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .render import KINDS, FigureRequest, OutputExistsError, SchemaError, plot


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from pipeline CSVs")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("csv", nargs="+", help="input CSV files (read-only)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--force", action="store_true",
                        help="overwrite an existing output file")
    parser.add_argument("--title", default=None)
    return parser


def cli_main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = plot(FigureRequest(kind=args.kind, csv_paths=args.csv,
                                 out_path=args.out, title=args.title,
                                 force=args.force))
        print(f"wrote {out}")
        return 0
    except (SchemaError, OutputExistsError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
