"""Standalone batch renderer: repnet-figures --in ... --out ... --kind ..."""

from __future__ import annotations

import argparse
import json
import sys

from .render import KINDS, FigureSpec, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="repnet-figures", description=__doc__)
    parser.add_argument(
        "--in", dest="inputs", action="append", required=True,
        help="input CSV (repeat for histogram overlays)",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--bin", dest="bin_width", type=float,
                        help="re-bin width for lambda1 histograms")
    parser.add_argument("--n", type=int, help="population size; maps p to m on m-sweeps")
    parser.add_argument("--label", dest="labels", action="append", default=[],
                        help="series label (repeat, matches --in order)")
    parser.add_argument("--json", action="store_true", help="print render metadata as JSON")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        spec = FigureSpec(
            inputs=args.inputs,
            kind=args.kind,
            out=args.out,
            bin_width=args.bin_width,
            n=args.n,
            labels=args.labels,
        )
        meta = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(meta))
    else:
        print(meta["out"])
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
