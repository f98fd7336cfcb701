"""``render`` entry point: one figure per invocation."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, PlotSpec, render_figures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a figure from a ggmest results CSV.",
    )
    parser.add_argument("--csv", required=True, help="results CSV (ggm-results-v1)")
    parser.add_argument("--figure", required=True, choices=FIGURES)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--predictions",
        help="analysis CSV (ggm-analysis-v1), required for asymptotic_overlay",
    )
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    spec = PlotSpec(
        input_csv=args.csv,
        figure=args.figure,
        output_path=args.out,
        predictions_csv=args.predictions,
    )
    try:
        out = render_figures(spec)
    except (ValueError, OSError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
