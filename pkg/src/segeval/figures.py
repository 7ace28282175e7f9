"""Figure rendering for the batch report.

Figures are drawn from the same aggregated data products that go into
the delimited files (bin summaries, correlation cells), never from a
separate recomputation, so the plots cannot drift from the tables.
Rendering uses the Agg backend and writes PNG files next to the CSVs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib import pyplot as plt

from .cohort import CorrelationMatrix, VolumeBin


def render_volume_bins(
    path: Path, bins: Sequence[VolumeBin], metric_label: str = "Dice"
) -> None:
    """Boxplot of one metric across reference-volume bins.

    Boxes come from the precomputed five-number summaries; outliers
    beyond the 1.5 IQR whiskers are drawn as diamonds.
    """
    stats = []
    for b in bins:
        stats.append(
            {
                "label": f"{b.volume_lo:.1f}-{b.volume_hi:.1f}",
                "med": b.median,
                "q1": b.q1,
                "q3": b.q3,
                "whislo": b.whisker_lo,
                "whishi": b.whisker_hi,
                "fliers": list(b.outliers),
            }
        )
    fig, ax = plt.subplots(figsize=(max(6.0, 1.0 + 0.9 * len(bins)), 4.5))
    ax.bxp(
        stats,
        showmeans=False,
        flierprops={"marker": "D", "markersize": 4, "markerfacecolor": "0.3"},
        boxprops={"color": "#2060a0"},
        medianprops={"color": "#c03020"},
    )
    ax.set_xlabel("reference volume bin (ml)")
    ax.set_ylabel(metric_label)
    ax.tick_params(axis="x", rotation=45)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_correlation(path: Path, matrix: CorrelationMatrix) -> None:
    """Heatmap of the metric correlation matrix.

    Blue marks direct correlation, red inverse; undefined cells are
    hatched gray. Values are printed into the cells.
    """
    k = len(matrix.metrics)
    grid = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(k):
            v = matrix.r[i][j]
            if v is not None:
                grid[i, j] = v
    masked = np.ma.masked_invalid(grid)
    size = max(5.0, 0.55 * k + 1.5)
    fig, ax = plt.subplots(figsize=(size, size))
    cmap = plt.get_cmap("RdBu").copy()
    cmap.set_bad(color="0.85")
    im = ax.imshow(masked, vmin=-1.0, vmax=1.0, cmap=cmap)
    ax.set_xticks(range(k), matrix.metrics, rotation=90)
    ax.set_yticks(range(k), matrix.metrics)
    if k <= 25:
        for i in range(k):
            for j in range(k):
                v = matrix.r[i][j]
                if v is None:
                    continue
                ax.text(
                    j,
                    i,
                    f"{v:.2f}",
                    ha="center",
                    va="center",
                    fontsize=6,
                    color="white" if abs(v) > 0.6 else "black",
                )
    fig.colorbar(im, ax=ax, shrink=0.8, label=f"{matrix.method} r")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
