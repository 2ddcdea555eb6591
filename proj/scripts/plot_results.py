#!/usr/bin/env python3
"""Plots the CSV files written by `csc` into an output directory.

Usage: plot_results.py <out_dir> [<png>]

Draws whichever of ci_bounds.csv, placebo_residuals.csv, residuals.csv and
null_vs_pre.csv are present.
"""

import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__, file=sys.stderr)
        return 2
    out = Path(sys.argv[1])
    target = Path(sys.argv[2]) if len(sys.argv) > 2 else out / "plots.png"

    panels = []
    if (out / "ci_bounds.csv").exists():
        panels.append("ci")
    for name in ("placebo_residuals.csv", "residuals.csv"):
        if (out / name).exists():
            panels.append(name)
    if (out / "null_vs_pre.csv").exists():
        panels.append("null_vs_pre")
    if not panels:
        print(f"no plottable CSV files in {out}", file=sys.stderr)
        return 1

    fig, axes = plt.subplots(len(panels), 1, figsize=(7, 3.2 * len(panels)), squeeze=False)
    for ax, kind in zip(axes[:, 0], panels):
        if kind == "ci":
            ci = pd.read_csv(out / "ci_bounds.csv")
            x = ci["time"].astype(str)
            ax.fill_between(x, ci["lower"], ci["upper"], alpha=0.3, label="accepted range")
            ax.plot(x, ci["point_estimate"], "o-", label="point estimate")
            ax.axhline(0.0, color="grey", lw=0.8)
            ax.set_title("Pointwise confidence sets")
            ax.legend()
        elif kind == "null_vs_pre":
            df = pd.read_csv(out / "null_vs_pre.csv")
            for (t0, mode), g in df.groupby(["t0", "fit_mode"]):
                ax.plot(g["rho_u"], g["rejection_rate"], "o-", label=f"T0={t0}, {mode}")
            level = json.loads((out / "result.json").read_text())["config"]["alpha"]
            ax.axhline(float(level), color="grey", ls="--", lw=0.8)
            ax.set_xlabel("rho_u")
            ax.set_ylabel("rejection rate")
            ax.legend()
        else:
            df = pd.read_csv(out / kind)
            flag = "placebo_post" if "placebo_post" in df else "post"
            ax.plot(df["time"].astype(str), df["residual"], "o-")
            post = df[df[flag] == 1]
            ax.plot(post["time"].astype(str), post["residual"], "o", color="C3", label="tested periods")
            ax.axhline(0.0, color="grey", lw=0.8)
            ax.set_title(kind.removesuffix(".csv").replace("_", " "))
            ax.legend()
        ax.tick_params(axis="x", labelrotation=45)
    fig.tight_layout()
    fig.savefig(target, dpi=120)
    print(target)
    return 0


if __name__ == "__main__":
    sys.exit(main())
