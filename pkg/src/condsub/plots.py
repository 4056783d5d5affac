"""Matplotlib figure rendering for CLI reports.

Figures are written deterministically (fixed SVG hash salt, no embedded
dates) so reruns with the same seed produce byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "condsub"

import matplotlib.pyplot as plt
import numpy as np

from .effects import EffectCurve


def save_figure(fig, path) -> None:
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def effect_figure(curves: list[EffectCurve], title: str):
    """Line plot of effect curves with bold inner-quartile emphasis."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for curve in curves:
        label = curve.rule or curve.kind
        if curve.categorical_levels is not None:
            ax.plot(curve.grid, curve.values, marker="o", linestyle="--",
                    label=label)
            ax.set_xticks(curve.grid)
            ax.set_xticklabels(curve.categorical_levels, rotation=30, ha="right")
            continue
        (line,) = ax.plot(curve.grid, curve.values, linewidth=1.2, label=label)
        if curve.q25 is not None and curve.q75 is not None:
            mask = (curve.grid >= curve.q25) & (curve.grid <= curve.q75)
            if np.sum(mask) >= 2:
                ax.plot(curve.grid[mask], curve.values[mask], linewidth=3.5,
                        color=line.get_color())
        if curve.outlier_grid:
            out = np.asarray(curve.outlier_grid)
            ax.plot(out, np.interp(out, curve.grid, curve.values), "o",
                    markersize=3, color=line.get_color())
    ax.set_title(title)
    ax.set_xlabel(curves[0].feature)
    ax.set_ylabel("prediction")
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    return fig


def importance_figure(rows: list[dict], title: str):
    """Grouped horizontal bars: marginal PFI vs aggregate subgroup PFI."""
    fig, ax = plt.subplots(figsize=(7, max(3, 0.5 * len(rows))))
    y = np.arange(len(rows))
    ax.barh(y + 0.2, [r["marginal_pfi"] for r in rows], height=0.35,
            label="marginal PFI")
    ax.barh(y - 0.2, [r["aggregate_cs_pfi"] for r in rows], height=0.35,
            label="subgroup PFI")
    ax.set_yticks(y)
    ax.set_yticklabels([r["feature"] for r in rows])
    ax.invert_yaxis()
    ax.set_xlabel("importance (loss increase)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def depth_sweep_figure(rows: list[dict], title: str):
    fig, ax = plt.subplots(figsize=(7, 5))
    depths = [r["depth"] for r in rows]
    ax.plot(depths, [r["cs_pfi"] for r in rows], marker="o", label="subgroup PFI")
    ax.axhline(rows[0]["marginal_pfi"], linestyle="--", color="gray",
               label="marginal PFI")
    ax.set_xlabel("max tree depth")
    ax.set_ylabel("importance")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def fidelity_figure(summary: list[dict], title: str):
    fig, ax = plt.subplots(figsize=(7, 4))
    samplers = [row["sampler"] for row in summary]
    ax.bar(samplers, [row["mean_fidelity"] for row in summary])
    ax.set_ylabel("mean data fidelity (-log MMD)")
    ax.set_title(title)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    return fig
