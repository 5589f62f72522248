"""Ridge feature attribution, per-cluster delta scores and candidate picks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core import ValidationError
from .clustering import Clustering, DEFAULT_NEIGHBORS, knn_similarity, spectral_clustering
from .topics import DEFAULT_TOPICS, TopicModel, _matrix, nmf

log = logging.getLogger(__name__)

TOP_FEATURES = 5
DEFAULT_TOP_M = 10


@dataclass
class AttributionModel:
    w: np.ndarray
    lam: float
    negative_set: list[int]
    positive_set: list[int]
    top_neg: list[int]
    top_pos: list[int]
    columns: list[str] = field(default_factory=list)


def ridge_fit(X, y, lam: float = 1.0, columns: list[str] | None = None) -> AttributionModel:
    """Solve ``(X^T X + lam I) w = X^T y`` (no intercept)."""
    if lam < 0:
        raise ValidationError("ridge lambda must be nonnegative")
    if columns is None:
        columns = list(getattr(X, "columns", []))
    X = _matrix(X)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValidationError(f"X has {X.shape[0]} rows but y has shape {y.shape}")
    d = X.shape[1]
    G = X.T @ X + lam * np.eye(d)
    b = X.T @ y
    try:
        w = np.linalg.solve(G, b)
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(X, y, rcond=None)[0] if lam == 0 else np.linalg.lstsq(G, b, rcond=None)[0]
    negative = [int(c) for c in np.flatnonzero(w < 0)]
    positive = [int(c) for c in np.flatnonzero(w >= 0)]
    order = np.argsort(w, kind="stable")
    top_neg = [int(c) for c in order[:TOP_FEATURES] if w[c] < 0]
    top_pos = [int(c) for c in order[::-1][:TOP_FEATURES] if w[c] > 0]
    columns = columns or [f"f{c}" for c in range(d)]
    return AttributionModel(w, lam, negative, positive, top_neg, top_pos, list(columns))


@dataclass
class ClusterAnomalyReport:
    delta: dict[int, float]
    members: dict[int, list[int]]
    anomalous: set[int]
    recommended: dict[int, tuple[str, str]] = field(default_factory=dict)
    skipped: list[int] = field(default_factory=list)


def cluster_delta(X, model: AttributionModel, clustering: Clustering, top_m: int = DEFAULT_TOP_M) -> ClusterAnomalyReport:
    """Mean cluster loading on the top negative minus the top positive features."""
    X = _matrix(X)
    if X.shape[0] != len(clustering.assignments):
        raise ValidationError("clustering does not cover the rows of X")
    if top_m < 0:
        raise ValidationError("top_m must be nonnegative")
    deltas: dict[int, float] = {}
    members: dict[int, list[int]] = {}
    skipped = []
    for c, rows in clustering.members().items():
        if not rows:
            log.warning("cluster %d is empty; skipped", c)
            skipped.append(c)
            continue
        mean = X[rows].mean(axis=0)
        neg = float(mean[model.top_neg].sum() / len(model.top_neg)) if model.top_neg else 0.0
        pos = float(mean[model.top_pos].sum() / len(model.top_pos)) if model.top_pos else 0.0
        deltas[c] = neg - pos
        members[c] = rows
    ranked = sorted(deltas, key=lambda c: (-deltas[c], c))
    return ClusterAnomalyReport(deltas, members, set(ranked[:top_m]), skipped=skipped)


@dataclass
class RestrictedAnalysis:
    rows: list[int]
    columns: list[int]
    topics: TopicModel
    clustering: Clustering


def _rerun(W: np.ndarray, rows, cols, topics: int, clusters: int, seed: int, k_neighbors: int) -> RestrictedAnalysis:
    n, d = W.shape
    if n < 2:
        raise ValidationError(f"restricted matrix has {n} rows; need at least 2")
    tm = nmf(W, min(topics, n, d), seed=seed)
    A = knn_similarity(tm.M, min(k_neighbors, n - 1))
    cl = spectral_clustering(A, None, min(clusters, n), seed)
    return RestrictedAnalysis(list(rows), list(cols), tm, cl)


def restrict_and_rerun(X, model: AttributionModel, clustering: Clustering, anomalous,
                       topics: int = DEFAULT_TOPICS, clusters: int = 25, seed: int = 0,
                       k_neighbors: int = DEFAULT_NEIGHBORS) -> tuple[RestrictedAnalysis, RestrictedAnalysis]:
    """Topic model + cluster the negative-feature block (all rows) and the
    nonnegative-feature block restricted to rows outside ``anomalous``.

    Topic and cluster counts are capped by the restricted matrix size.
    """
    X = _matrix(X)
    if not model.negative_set:
        raise ValidationError("no negative-coefficient columns; W- is empty")
    if not model.positive_set:
        raise ValidationError("no nonnegative-coefficient columns; W+ is empty")
    anomalous = set(anomalous)
    all_rows = list(range(X.shape[0]))
    kept = [r for r in all_rows if int(clustering.assignments[r]) not in anomalous]
    if not kept:
        raise ValidationError("every row lies in an anomalous cluster; W+ is empty")
    neg = _rerun(X[:, model.negative_set], all_rows, model.negative_set, topics, clusters, seed, k_neighbors)
    pos = _rerun(X[np.ix_(kept, model.positive_set)], kept, model.positive_set, topics, clusters, seed, k_neighbors)
    return neg, pos


def recommend(clustering: Clustering, profiles) -> dict[int, tuple[str, str]]:
    """Per cluster: (id with the highest CPM score, id with the highest pressure).

    ``profiles`` are aligned with the clustered rows; ties go to the earlier row.
    """
    profiles = list(profiles)
    if len(profiles) != len(clustering.assignments):
        raise ValidationError("profiles are not aligned with the clustering rows")
    out = {}
    for c, rows in clustering.members().items():
        if not rows:
            continue
        by_count = max(rows, key=lambda r: (profiles[r].final_cpm_score, -r))
        by_pressure = max(rows, key=lambda r: (profiles[r].total_pressure, -r))
        out[c] = (profiles[by_count].id, profiles[by_pressure].id)
    return out
