"""snplot: figures from snlab CSV output.

Two subcommands mirror the two figure kinds:

    snplot correlations --in out/gaussian/correlations_*.csv --out fig.png
    snplot screens      --in out/signaling/screens.csv       --out fig.svg

The output format follows the ``--out`` suffix (png or svg). Inputs
are read-only; nothing is ever written back to them.
"""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, plot_correlations, plot_screen_densities
from .reader import ContractError

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snplot",
        description="Render figures from snlab CSV tables.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "correlations": "one panel per temperature: negativity and "
                        "information against time",
        "screens": "overlaid final densities from a signaling run",
    }
    for name in ("correlations", "screens"):
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV files")
        sp.add_argument("--out", required=True,
                        help="output image path (.png or .svg)")
        sp.add_argument("--columns", type=int, default=4,
                        help="panels per row (correlations only)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = PlotSpec(inputs=tuple(args.inputs), out=args.out,
                        max_columns=args.columns)
        if args.command == "correlations":
            written = plot_correlations(spec)
        else:
            written = plot_screen_densities(spec)
    except ContractError as exc:
        print(f"contract error: {exc}", file=sys.stderr)
        return 2
    print(written)
    return 0


if __name__ == "__main__":
    sys.exit(main())
