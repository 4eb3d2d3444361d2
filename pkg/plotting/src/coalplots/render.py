"""Deterministic multi-panel rendering of relative-branch-length curves."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .figspec import FigureSpec, SpecError, read_series_csv

__all__ = ["render", "logit", "kingman_reference"]

_PANEL_SIZE = (3.2, 2.6)
_DPI = 150


def logit(values) -> np.ndarray:
    """log(p / (1-p)); raises outside (0,1) rather than clipping."""
    arr = np.asarray(values, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("logit needs values strictly inside (0, 1)")
    return np.log(arr / (1.0 - arr))


def kingman_reference(n: int) -> np.ndarray:
    """Relative spectrum i**-1 / sum_j j**-1 of the pairwise-merger coalescent."""
    inv = 1.0 / np.arange(1, n, dtype=np.float64)
    return inv / inv.sum()


def render(spec: FigureSpec, out: str) -> None:
    """Render the figure to out (.png or .svg), byte-stable across runs.

    Exact-style series draw as lines, Monte Carlo series as circles; the
    optional reference overlay is the pairwise-coalescent curve for the
    panel's sample size.
    """
    plt.rcParams["svg.hashsalt"] = "coalplots"
    fig, axes = plt.subplots(
        spec.rows,
        spec.cols,
        figsize=(_PANEL_SIZE[0] * spec.cols, _PANEL_SIZE[1] * spec.rows),
        squeeze=False,
    )
    transform = logit if spec.yscale == "logit" else np.asarray
    for idx, panel in enumerate(spec.panels):
        ax = axes[idx // spec.cols][idx % spec.cols]
        n_panel = 2
        for series in panel.series:
            xs, ys = read_series_csv(series.path)
            n_panel = max(n_panel, len(xs) + 1)
            marker = dict(linestyle="-") if series.style == "line" else dict(
                linestyle="none", marker="o", markersize=3, fillstyle="none"
            )
            ax.plot(xs, transform(ys), label=series.label, **marker)
        if spec.kingman:
            ref = kingman_reference(n_panel)
            ax.plot(
                range(1, n_panel),
                transform(ref),
                color="black",
                linewidth=0.9,
                label="pairwise-only reference",
            )
        ax.set_title(panel.title, fontsize=9)
        ax.set_xlabel("family size i", fontsize=8)
        ax.set_ylabel(
            "logit mean relative length" if spec.yscale == "logit" else "mean relative length",
            fontsize=8,
        )
        ax.tick_params(labelsize=7)
        ax.legend(fontsize=6, frameon=False)
    for idx in range(len(spec.panels), spec.rows * spec.cols):
        axes[idx // spec.cols][idx % spec.cols].set_axis_off()
    fig.tight_layout()
    if out.endswith(".svg"):
        fig.savefig(out, format="svg", metadata={"Date": None})
    elif out.endswith(".png"):
        fig.savefig(out, format="png", dpi=_DPI, metadata={"Software": "coalplots"})
    else:
        plt.close(fig)
        raise SpecError(f"output must end in .png or .svg, got {out!r}")
    plt.close(fig)
