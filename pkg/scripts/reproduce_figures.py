#!/usr/bin/env python3
"""Regenerate the three standard figures end to end.

Runs the sweep CLI to produce the canonical CSVs, then renders them with
plotgen (if installed). Desk scale (default) finishes in minutes; full
scale uses 5000 Monte Carlo trials per operating point.

    python3 scripts/reproduce_figures.py --scale desk --out figures_out
"""

import argparse
import os
import sys

from miisac.cli import cmd_figures


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--out", default="figures_out")
    p.add_argument("--seed", type=int, default=20260824)
    p.add_argument("--trials", type=int, help="override per-point trial count")
    args = p.parse_args()

    files = cmd_figures("all", args.scale, args.out, seed=args.seed,
                        trials=args.trials,
                        progress=lambda m: print(m, file=sys.stderr))
    try:
        from plotgen import FigureSpec, render
    except ImportError:
        print("plotgen not installed; CSVs written, skipping image rendering")
        return 0

    by_name = {os.path.basename(f): f for f in files}
    figures = [
        ("crb_vs_range", ["fig2_crb_vs_range.csv", "fig2_mle_markers.csv"], "fig2.svg"),
        ("penalty_vs_range",
         ["fig3_penalty_vs_range.csv", "fig3_mle_penalty_markers.csv"], "fig3.svg"),
        ("crb_vs_pilots",
         ["fig4_crb_vs_pilots_r5.csv", "fig4_crb_vs_pilots_r10.csv",
          "fig4_crb_vs_pilots_r20.csv", "fig4_mle_markers.csv"], "fig4.svg"),
    ]
    for kind, inputs, out_name in figures:
        spec = FigureSpec(
            input_csvs=[by_name[n] for n in inputs],
            figure_kind=kind,
            output_path=os.path.join(args.out, out_name),
        )
        print(f"rendered {render(spec)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
