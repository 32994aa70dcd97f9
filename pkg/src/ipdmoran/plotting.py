"""Vector plots rendered from the result tables. Requires matplotlib."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_ranks(tables, path: str | Path) -> Path:
    """Rank of every strategy against population size."""
    plt = _pyplot()
    sizes = sorted(tables)
    names = sorted(tables[sizes[0]].means())
    fig, ax = plt.subplots(figsize=(7, max(4, 0.25 * len(names))))
    for name in names:
        ax.plot(sizes, [tables[n].ranks()[name] for n in sizes], marker="o", lw=1)
        ax.annotate(name, (sizes[-1], tables[sizes[-1]].ranks()[name]), xytext=(4, 0),
                    textcoords="offset points", va="center", fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("N")
    ax.set_ylabel("rank")
    ax.set_title(f"ranks by mean fixation ({tables[sizes[0]].kind})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_heatmap(labels: Sequence[int], values: np.ndarray, path: str | Path, title: str = "") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(values, vmin=-1, vmax=1, cmap="viridis")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("N")
    ax.set_ylabel("N")
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_cooperation(rates: np.ndarray, path: str | Path, title: str = "") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(np.arange(1, len(rates) + 1), rates)
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("round")
    ax.set_ylabel("cooperation rate")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_validation(rows, path: str | Path) -> Path:
    """Simulated points with error bars over the exact curve, one panel per pair."""
    plt = _pyplot()
    pairs = list(dict.fromkeys((r.name_a, r.name_b) for r in rows))
    fig, axes = plt.subplots(1, len(pairs), figsize=(4 * len(pairs), 3.5), squeeze=False)
    for ax, pair in zip(axes[0], pairs):
        sub = [r for r in rows if (r.name_a, r.name_b) == pair]
        for i_label, marker in (("x_1", "o"), ("x_N/2", "s"), ("x_N-1", "^")):
            pts = [r for r in sub if _label(r) == i_label]
            if not pts:
                continue
            ns = [r.N for r in pts]
            ax.plot(ns, [r.exact for r in pts], lw=1)
            ax.errorbar(ns, [r.simulated for r in pts], yerr=[r.ci95 for r in pts], fmt=marker, ms=4, label=i_label)
        ax.set_title(f"{pair[0]} / {pair[1]}", fontsize=9)
        ax.set_xlabel("N")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def _label(r) -> str:
    if r.i == 1:
        return "x_1"
    if r.i == r.N - 1:
        return "x_N-1"
    return "x_N/2"
