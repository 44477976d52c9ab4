"""Matplotlib figures written next to the plot-data CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CLASS_COLOURS = ("tab:blue", "tab:orange")


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_histogram_tips(centers, tips, labels, path, sems=None):
    """Averaged histogram tips, one polyline per class."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, (tip, label) in enumerate(zip(tips, labels)):
        ax.plot(centers, tip, marker="o", color=CLASS_COLOURS[i % 2], label=label)
        if sems is not None:
            ax.fill_between(centers, tip - sems[i], tip + sems[i], color=CLASS_COLOURS[i % 2], alpha=0.25)
    ax.set_xlabel("QBER")
    ax.set_ylabel("mean count per block")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_scree(ratios, path):
    ratios = np.asarray(ratios)
    idx = np.arange(1, len(ratios) + 1)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(idx, ratios, color="0.6", label="component")
    ax.plot(idx, np.cumsum(ratios), marker="o", color="k", label="cumulative")
    ax.set_xticks(idx)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("principal component")
    ax.set_ylabel("explained variance ratio")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_decision_regions(gx, gy, grid_labels, points, point_labels, title, path):
    """Decision regions over the first two principal components."""
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.contourf(gx, gy, grid_labels, levels=[-0.5, 0.5, 1.5], colors=CLASS_COLOURS, alpha=0.25)
    for c in (0, 1):
        sel = point_labels == c
        ax.scatter(points[sel, 0], points[sel, 1], s=4, color=CLASS_COLOURS[c], label=str(c))
    ax.set_xlabel("PCA 1")
    ax.set_ylabel("PCA 2")
    ax.set_title(title)
    ax.legend(frameon=False, markerscale=3)
    return _save(fig, path)
