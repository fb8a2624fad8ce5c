#!/usr/bin/env python3
"""Plots for the CSV files written by `rim bench`, `rim eval` and `rim lesion-sim`."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_bench(csv, out):
    df = pd.read_csv(csv)
    nets = df[df.method != "cs"]
    features = sorted(nets.features.unique())
    fig, axes = plt.subplots(1, len(features), figsize=(4 * len(features), 3.5), squeeze=False, sharey=True)
    for ax, f in zip(axes[0], features):
        for method, g in nets[nets.features == f].groupby("method"):
            g = g.sort_values("time_steps")
            ax.errorbar(g.time_steps, g.mean_ms, yerr=g.std_ms, marker="o", capsize=2, label=method)
        cs = df[df.method == "cs"]
        if not cs.empty:
            ax.axhline(cs.mean_ms.iloc[0], color="gray", ls="--", label="cs")
        ax.set_title(f"F = {f}")
        ax.set_xlabel("time steps")
    axes[0][0].set_ylabel("mean time per slice (ms)")
    axes[0][-1].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_eval(csv, out):
    df = pd.read_csv(csv)
    df = df[df.status == "ok"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, metric in zip(axes, ["ssim", "psnr"]):
        stats, labels = [], []
        for _, row in df.iterrows():
            q = [row[f"{metric}_{k}"] for k in ("min", "q1", "median", "q3", "max")]
            stats.append({"whislo": q[0], "q1": q[1], "med": q[2], "q3": q[3], "whishi": q[4], "fliers": []})
            train = "" if row.train_set == "-" else f"/{row.train_set}"
            labels.append(f"{row.method}{train}\n{row.eval_set} R={row.acceleration:g}")
        ax.bxp(stats, showfliers=False)
        ax.set_xticks(range(1, len(labels) + 1), labels, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel(metric.upper())
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_lesion(csv, out):
    df = pd.read_csv(csv)
    accels = sorted(df.acceleration.unique())
    fig, axes = plt.subplots(1, len(accels), figsize=(4 * len(accels), 3.8), squeeze=False, sharey=True)
    for ax, r in zip(axes[0], accels):
        sub = df[df.acceleration == r]
        for method, g in sub.groupby("method"):
            ax.errorbar(g.simulated, g.measured_mean, yerr=g.measured_std, marker="o", capsize=2, label=method)
        lo, hi = sub.simulated.min(), sub.simulated.max()
        ax.plot([lo, hi], [lo, hi], color="gray", ls=":")
        ax.set_title("fully sampled" if r == 1 else f"R = {r:g}")
        ax.set_xlabel("simulated intensity")
    axes[0][0].set_ylabel("measured intensity")
    axes[0][-1].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("kind", choices=["bench", "eval", "lesion"])
    parser.add_argument("csv", help="bench CSV, eval <prefix>.cells.csv, or lesion <prefix>.csv")
    parser.add_argument("out", help="output image (png, pdf, svg)")
    args = parser.parse_args()
    {"bench": plot_bench, "eval": plot_eval, "lesion": plot_lesion}[args.kind](args.csv, args.out)


if __name__ == "__main__":
    main()
