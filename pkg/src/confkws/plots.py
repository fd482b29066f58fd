"""Figure rendering for evaluation outputs: DET curves and per-group AUC
bars, written next to the CSV/JSON they are drawn from."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import DetCurve, MetricsReport

logger = logging.getLogger(__name__)

_SAVEFIG = {"dpi": 150, "bbox_inches": "tight"}


def plot_det(curves: dict[str, DetCurve], path: str | Path) -> Path:
    """Overlay one or more DET curves (FAR on x, FRR on y)."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    for label, curve in curves.items():
        ax.plot(curve.far, curve.frr, label=label, linewidth=1.5)
    ax.plot([0, 1], [1, 0], linestyle=":", color="gray", linewidth=0.8)
    ax.set_xlabel("False Accept Rate")
    ax.set_ylabel("False Reject Rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.grid(alpha=0.3)
    if curves:
        ax.legend(frameon=False)
    path = Path(path)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_det_zoom(curves: dict[str, DetCurve], path: str | Path, max_rate: float = 0.2) -> Path:
    """Low-error corner of the DET plot, where operating points usually live."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    for label, curve in curves.items():
        ax.plot(curve.far, curve.frr, label=label, linewidth=1.5)
    ax.set_xlabel("False Accept Rate")
    ax.set_ylabel("False Reject Rate")
    ax.set_xlim(0, max_rate)
    ax.set_ylim(0, max_rate)
    ax.grid(alpha=0.3)
    if curves:
        ax.legend(frameon=False)
    path = Path(path)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_group_aucs(reports: dict[str, MetricsReport], path: str | Path) -> Path:
    """Grouped bars of per-vowel-group AUC, one bar series per report."""
    labels: list[str] = []
    for rep in reports.values():
        for g in rep.groups:
            if g not in labels:
                labels.append(g)
    fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(labels) + 2), 4.0))
    width = 0.8 / max(len(reports), 1)
    for k, (name, rep) in enumerate(reports.items()):
        xs = [i + k * width for i in range(len(labels))]
        ys = [rep.groups.get(g, 0.0) for g in labels]
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("group AUC (fraction)")
    if reports:
        ax.legend(frameon=False)
    path = Path(path)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_training_log(rows: list[dict], path: str | Path) -> Path:
    """Loss-vs-step curve from parsed training-log rows."""
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    steps = [int(r["step"]) for r in rows]
    losses = [float(r["loss"]) for r in rows]
    ax.plot(steps, losses, linewidth=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.grid(alpha=0.3)
    path = Path(path)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path
