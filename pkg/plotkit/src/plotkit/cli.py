"""plotkit <figure-kind> --in <csv...> --out <path> [--window w]

Exit codes: 0 success, 1 invalid parameters, 2 missing/invalid CSV or I/O
error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import DEFAULT_WINDOW, FIGURE_KINDS, FigureSpec, render
from .schema import CsvSchemaError, validate_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    subs = parser.add_subparsers(dest="kind", required=True)
    for kind in FIGURE_KINDS:
        sub = subs.add_parser(kind)
        sub.add_argument("--in", dest="inputs", nargs="+", required=True,
                         metavar="CSV")
        sub.add_argument("--out", dest="out", required=True)
        if kind == "mnist-ntk":
            sub.add_argument("--window", dest="window", type=int,
                             default=DEFAULT_WINDOW)
        if kind == "ntk-evolution":
            sub.add_argument("--log-scale", dest="log_scale", action="store_true")
        sub.add_argument("--raster", dest="raster", action="store_true")
    subs.add_parser("validate").add_argument("--in", dest="inputs", nargs="+",
                                             required=True, metavar="CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "validate":
            worst = 0
            for path in args.inputs:
                report = validate_csv(path)
                status = report.schema or "unrecognized"
                print(f"{path}: {status}, {len(report.violations)} violation(s)")
                for v in report.violations:
                    print(f"  {v}")
                worst = max(worst, 2 if not report.ok else 0)
            return worst
        spec = FigureSpec(
            kind=args.kind, inputs=tuple(args.inputs), out=args.out,
            window=getattr(args, "window", DEFAULT_WINDOW),
            log_scale=getattr(args, "log_scale", False),
            raster=args.raster,
        )
        out = render(spec)
        print(f"wrote {out}")
        return 0
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 1
    except CsvSchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
