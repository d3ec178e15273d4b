"""plot-ledger: render dgdiss energy ledgers into figures, or validate them.

Either `plot-ledger --spec spec.json` or positional ledger paths with
--panel/--out.  `--validate` re-checks the row identities instead of
rendering.  Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import PANELS, PlotSpec, normalize_panels, render
from .ledger import LedgerFormatError, validate_ledger

__all__ = ["main", "entry"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot-ledger",
        description="Render dgdiss energy-ledger CSV files into figures.",
    )
    parser.add_argument("ledgers", nargs="*", help="ledger CSV paths, one per penalty value")
    parser.add_argument("--spec", help="JSON plot spec (inputs, output, panels, ranges)")
    parser.add_argument(
        "--panel", default="all", help=f"panel selection: one of {PANELS} or 'all'"
    )
    parser.add_argument("--out", help="output image path (.png or .svg)")
    parser.add_argument(
        "--validate", action="store_true", help="validate the ledgers instead of rendering"
    )
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.validate:
        if not args.ledgers:
            parser.error("--validate needs ledger paths")
        failed = False
        for path in args.ledgers:
            try:
                report = validate_ledger(path)
            except (LedgerFormatError, OSError) as e:
                print(f"{path}: {e}", file=sys.stderr)
                failed = True
                continue
            print(f"{path}: {report.summary()}")
            failed = failed or not report.ok
        return 1 if failed else 0

    try:
        if args.spec:
            with open(args.spec, "r", encoding="utf-8") as f:
                spec = PlotSpec.from_dict(json.load(f))
        else:
            if not args.ledgers:
                parser.error("pass ledger paths or --spec")
            if not args.out:
                parser.error("--out is required without --spec")
            spec = PlotSpec(
                inputs=tuple(args.ledgers),
                output=args.out,
                panels=normalize_panels(args.panel),
            )
        report = render(spec)
    except (LedgerFormatError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for path in report["outputs"]:
        print(path)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
