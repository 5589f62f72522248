"""SVG scatter plots of embeddings and SELEX profiles."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Ellipse  # noqa: E402

from .core import ValidationError  # noqa: E402

plt.rcParams["svg.hashsalt"] = "boltzfold"


def _svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def tsne_scatter_svg(Y, clusters, ids=None, labels=None, recommended=(), anomalous=()) -> str:
    """One point per row coloured by cluster.

    HC_LP rows get a red cross, LC_HP a green cross, recommended ids a blue
    cross; anomalous clusters are outlined by a 2-sigma ellipse.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise ValidationError(f"expected N x 2 coordinates, got shape {Y.shape}")
    clusters = np.asarray(clusters, dtype=int)
    if len(clusters) != len(Y):
        raise ValidationError("cluster assignments do not match the coordinates")
    ids = list(ids) if ids is not None else [str(r) for r in range(len(Y))]
    labels = labels or {}
    fig, ax = plt.subplots(figsize=(6, 5))
    cmap = plt.get_cmap("tab20")
    for c in sorted(set(clusters.tolist())):
        rows = clusters == c
        ax.scatter(Y[rows, 0], Y[rows, 1], s=18, color=cmap((c - 1) % 20), label=f"cluster {c}")
        if c in anomalous and rows.sum() >= 2:
            mu, sd = Y[rows].mean(axis=0), Y[rows].std(axis=0) + 1e-9
            ax.add_patch(Ellipse(mu, 4 * sd[0], 4 * sd[1], fill=False, ls="--", color="black"))
    for mark, color in (("HC_LP", "red"), ("LC_HP", "green")):
        rows = [r for r, i in enumerate(ids) if labels.get(i) == mark]
        if rows:
            ax.scatter(Y[rows, 0], Y[rows, 1], marker="x", s=60, color=color, label=mark)
    rows = [r for r, i in enumerate(ids) if i in set(recommended)]
    if rows:
        ax.scatter(Y[rows, 0], Y[rows, 1], marker="x", s=60, color="blue", label="recommended")
    ax.set_xlabel("t-SNE 1")
    ax.set_ylabel("t-SNE 2")
    if len(set(clusters.tolist())) <= 12:
        ax.legend(fontsize=6, loc="best")
    fig.tight_layout()
    return _svg(fig)


def selex_scatter_svg(profiles) -> str:
    """CPM score against total pressure, anomaly labels highlighted."""
    fig, ax = plt.subplots(figsize=(5, 4))
    colors = {"NONE": "0.6", "HC_LP": "red", "LC_HP": "green"}
    for label, color in colors.items():
        pts = [(p.final_cpm_score, p.total_pressure) for p in profiles if p.label == label]
        if pts:
            x, y = zip(*pts)
            ax.scatter(x, y, s=14, color=color, label=label)
    ax.set_xlabel("count-per-million score")
    ax.set_ylabel("selective pressure")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _svg(fig)
