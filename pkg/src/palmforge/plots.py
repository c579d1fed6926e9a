"""Figure rendering for the report path.

Every subcommand that produces a table can render a companion PNG next
to the delimited output.  Figures are diagnostics, not interfaces: they
are written to files and never shown.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_z_scores",
    "save_running_means",
    "save_decay_curve",
    "save_count_ecdfs",
    "save_cell_histogram",
]


def _finish(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_z_scores(names, z_values, threshold, path, title="invariance residuals"):
    fig, ax = plt.subplots(figsize=(7, 3.4))
    x = np.arange(len(names))
    clipped = np.clip(z_values, -3 * threshold, 3 * threshold)
    ax.bar(x, clipped, color="#0173b2")
    ax.axhline(threshold, color="#d55e00", lw=1, ls="--", label=f"+/- {threshold:.2f}")
    ax.axhline(-threshold, color="#d55e00", lw=1, ls="--")
    ax.set_xticks(x)
    ax.set_xticklabels([f"f{i}" for i in x], fontsize=8)
    ax.set_ylabel("z")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8, frameon=False)
    _finish(fig, path)


def save_running_means(table, sizes, path, reference=None, title="running means"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for seed, means in table.items():
        ax.plot(sizes, means, marker="o", ms=3, lw=1, label=f"seed {seed}")
    if reference is not None:
        ax.axhline(reference, color="k", lw=1, ls=":", label=f"limit {reference:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("running mean of 1 + B_1")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=7, frameon=False)
    _finish(fig, path)


def save_decay_curve(rows, path, title="window-average variance decay"):
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ws = [r[0] for r in rows]
    vs = [r[1] for r in rows]
    ax.plot(ws, vs, marker="s", ms=4, lw=1.2, color="#029e73")
    if all(v > 0 for v in vs):
        ax.set_yscale("log")
    ax.set_xscale("log")
    ax.set_xlabel("window size W")
    ax.set_ylabel("var of shift average")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def save_count_ecdfs(counts_by_offset, weights, path, title="bin-count distributions"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for label, counts in counts_by_offset.items():
        order = np.argsort(counts)
        cw = np.cumsum(np.asarray(weights)[order])
        ax.step(np.asarray(counts)[order], cw / cw[-1], where="post", lw=1, label=label)
    ax.set_xlabel("weighted count in bin")
    ax.set_ylabel("ECDF")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8, frameon=False)
    _finish(fig, path)


def save_cell_histogram(volumes, weights, path, title="zero-cell lengths"):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.hist(volumes, bins=40, weights=weights, color="#cc78bc", edgecolor="none")
    ax.set_xlabel("cell length")
    ax.set_ylabel("weighted frequency")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)
