"""Command-line front end.

    lagmaxwell-plots plot residuals --in "runs/smoke/residual_*.csv" --out fig.png
    lagmaxwell-plots plot field --in "runs/smoke/field_magnitude_0.0500pi.pgm" --out field.png

Exit code 0 on success (the output path is printed), 1 on any input error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot_field, plot_residuals
from .io import MalformedInputError, MixedScenarioError


def _parse_label(text: str):
    token, sep, label = text.partition("=")
    if not sep or not token:
        raise argparse.ArgumentTypeError(
            f"expected TOKEN=LABEL (e.g. 0.0500pi=nearly closed), got {text!r}")
    return token, label


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lagmaxwell-plots",
                                     description="Render figures from run artifacts.")
    sub = parser.add_subparsers(dest="command", required=True)

    plot = sub.add_parser("plot", help="render a figure from run artifacts")
    plot.add_argument("kind", choices=("residuals", "field"),
                      help="residual-history curves or a field-magnitude heatmap")
    plot.add_argument("--in", dest="inputs", required=True, metavar="GLOB",
                      help="input file glob (quote it to keep the shell out)")
    plot.add_argument("--out", dest="output", required=True, metavar="FILE",
                      help="output image path")
    plot.add_argument("--linear-y", action="store_true",
                      help="linear instead of logarithmic residual axis")
    plot.add_argument("--title", default=None)
    plot.add_argument("--label", action="append", type=_parse_label, default=[],
                      metavar="TOKEN=LABEL",
                      help="override the legend label for one angle token; repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(inputs=args.inputs, output=args.output,
                      log_y=not args.linear_y,
                      labels=dict(args.label) or None,
                      title=args.title)
    try:
        if args.kind == "residuals":
            result = plot_residuals(spec)
        else:
            result = plot_field(spec)
    except (MalformedInputError, MixedScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(result.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
