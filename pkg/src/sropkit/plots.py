"""Matplotlib figure rendering for profile, ladder, and density reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .stats import KdeCurve


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def profile_figure(rows: list[dict], path: str | Path, title: str = "") -> Path:
    """Depth profile of log mean roll-off with an interquartile band."""
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(rows)), 4.0))
    xs = range(len(rows))
    means = [row["log_mean"] for row in rows]
    ax.plot(xs, means, marker="o", color="tab:blue", label="log(mean roll-off)")
    lo = [math.log(row["q1"]) if row["q1"] > 0 else float("nan") for row in rows]
    hi = [math.log(row["q3"]) if row["q3"] > 0 else float("nan") for row in rows]
    ax.fill_between(xs, lo, hi, alpha=0.25, color="tab:blue", label="q1..q3")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([row["layer"] for row in rows], rotation=45, ha="right")
    ax.set_ylabel("log(mean normalized roll-off)")
    ax.set_xlabel("layer")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def ladder_figure(rows: list[dict], path: str | Path, title: str = "") -> Path:
    """Mean roll-off against resolution for the downscaling ladder."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    res = [row["resolution"] for row in rows]
    means = [row["mean"] for row in rows]
    ax.plot(res, means, marker="s", color="tab:red")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("resolution")
    ax.set_ylabel("mean normalized roll-off")
    ax.invert_xaxis()
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def kde_figure(curve: KdeCurve, path: str | Path, title: str = "") -> Path:
    """Density curve with detected peaks marked."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(curve.grid, curve.density, color="tab:red")
    ax.fill_between(curve.grid, curve.density, alpha=0.2, color="tab:red")
    for peak in curve.peaks():
        ax.axvline(peak, color="gray", linestyle=":", alpha=0.7)
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("normalized roll-off")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)
