"""Report figures. Rendering uses the Agg backend and writes PNG files."""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    tmp = path.with_name(f".{path.stem}.{os.getpid()}.tmp.png")
    fig.savefig(tmp, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def agreement_figure(histogram: dict[float, int], random_model: dict[float, float], path) -> Path:
    """Observed agreement shares (solid) next to the random-annotator model (hatched)."""
    levels = sorted(histogram)
    total = sum(histogram.values())
    observed = [histogram[a] / total for a in levels]
    expected = [float(random_model.get(a, 0.0)) for a in levels]
    x = np.arange(len(levels))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 2.8))
        ax.bar(x - 0.2, observed, width=0.4, color="#4c72b0", label="gold records")
        ax.bar(x + 0.2, expected, width=0.4, color="white", edgecolor="#4c72b0",
               hatch="//", label="random annotators")
        ax.set_xticks(x, [f"{a:.0%}" for a in levels])
        ax.set_xlabel("agreement")
        ax.set_ylabel("share of records")
        ax.legend(frameon=False)
        return _save(fig, path)


def ppref_figure(report, path) -> Path:
    methods = [m for m in report.methods if m not in report.failures]
    rows = [("Annotators", report.annotators)] + [
        (m, [c.ppref if c is not None else np.nan for c in report.methods[m]]) for m in methods]
    x = np.arange(len(report.buckets))
    width = 0.8 / max(len(rows), 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.5, 3.2))
        cmap = plt.get_cmap("tab10")
        for i, (name, vals) in enumerate(rows):
            ax.bar(x - 0.4 + width * (i + 0.5), vals, width=width, label=name,
                   color="0.6" if name == "Annotators" else cmap(i % 10))
        ax.axhline(0.5, color="k", lw=0.8, ls="--", label="Random")
        ax.set_xticks(x, [f"{b}\n(n={n})" for b, n in zip(report.buckets, report.sizes)])
        ax.set_ylim(0, 1)
        ax.set_ylabel("ppref")
        ax.legend(frameon=False, ncol=2, bbox_to_anchor=(1.0, 1.0), loc="upper left")
        return _save(fig, path)


def correlation_figure(matrix: np.ndarray, names: list[str], path) -> Path:
    with plt.rc_context(STYLE):
        size = 1.0 + 0.55 * len(names)
        fig, ax = plt.subplots(figsize=(size + 1.0, size))
        im = ax.imshow(np.ma.masked_invalid(matrix), vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_xticks(range(len(names)), names, rotation=60, ha="right")
        ax.set_yticks(range(len(names)), names)
        for i in range(len(names)):
            for j in range(len(names)):
                text = "-" if np.isnan(matrix[i, j]) else f"{matrix[i, j]:.2f}"
                ax.text(j, i, text, ha="center", va="center", fontsize=7)
        fig.colorbar(im, ax=ax, shrink=0.8, label="Pearson r")
        return _save(fig, path)
