"""kNN similarity graphs, unnormalised spectral clustering and the silhouette sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score

from ..core import ValidationError
from .topics import _matrix

log = logging.getLogger(__name__)

DEFAULT_NEIGHBORS = 10


@dataclass
class Clustering:
    assignments: np.ndarray  # 1-based cluster ids
    k: int
    silhouette: float
    embedding: np.ndarray | None = None

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {c: [] for c in range(1, self.k + 1)}
        for row, c in enumerate(self.assignments):
            out[int(c)].append(row)
        return out


def sq_distances(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def knn_similarity(X, k_neighbors: int = DEFAULT_NEIGHBORS) -> np.ndarray:
    """Locally scaled Gaussian weights on the either-direction kNN graph.

    ``A_ij = exp(-d_ij^2 / (s_i s_j))`` with ``s_i`` the distance from row i
    to its ``k``-th neighbour (zero scales fall back to the median positive
    scale, or 1). Identical points get weight 1.
    """
    X = _matrix(X)
    n = X.shape[0]
    if not 1 <= k_neighbors < n:
        raise ValidationError(f"k_neighbors={k_neighbors} must lie in [1, rows={n})")
    D2 = sq_distances(X)
    ranked = np.argsort(D2 + np.diag(np.full(n, np.inf)), axis=1, kind="stable")[:, :k_neighbors]
    scale = np.sqrt(D2[np.arange(n), ranked[:, -1]])
    positive = scale[scale > 0]
    scale[scale == 0] = np.median(positive) if positive.size else 1.0
    edges = np.zeros((n, n), dtype=bool)
    edges[np.repeat(np.arange(n), k_neighbors), ranked.ravel()] = True
    edges |= edges.T
    A = np.where(edges, np.exp(-D2 / np.outer(scale, scale)), 0.0)
    np.fill_diagonal(A, 0.0)
    return A


def laplacian(A: np.ndarray) -> np.ndarray:
    return np.diag(A.sum(axis=1)) - A


def _relabel(labels: np.ndarray) -> np.ndarray:
    mapping: dict[int, int] = {}
    for lab in labels:
        mapping.setdefault(int(lab), len(mapping) + 1)
    return np.array([mapping[int(lab)] for lab in labels], dtype=int)


def spectral_clustering(A, embed_dim: int | None = None, k_clusters: int = 2, seed: int = 0) -> Clustering:
    """k-means on the eigenvectors of the smallest eigenvalues of ``L = D - A``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValidationError("similarity matrix must be square")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12):
        raise ValidationError("similarity matrix is not symmetric")
    if (A < 0).any():
        raise ValidationError("similarity matrix has negative entries")
    if np.any(np.diag(A) != 0):
        raise ValidationError("similarity matrix must have a zero diagonal")
    if not 1 <= k_clusters <= n:
        raise ValidationError(f"k_clusters={k_clusters} must lie in [1, rows={n}]")
    embed_dim = k_clusters if embed_dim is None else embed_dim
    if not 1 <= embed_dim <= n:
        raise ValidationError(f"embed_dim={embed_dim} must lie in [1, rows={n}]")
    _, vecs = np.linalg.eigh(laplacian(A))
    V = vecs[:, :embed_dim]
    km = KMeans(n_clusters=k_clusters, init="k-means++", n_init=10, random_state=seed).fit(V)
    labels = _relabel(km.labels_)
    k = int(labels.max())
    sil = float(silhouette_score(V, labels)) if 2 <= k <= n - 1 else 0.0
    return Clustering(labels, k, sil, V)


def silhouette_sweep(M, k_min: int = 5, k_max: int = 50, seed: int = 0,
                     k_neighbors: int = DEFAULT_NEIGHBORS) -> tuple[int, dict[int, float]]:
    """Best cluster count by silhouette (ties to the smaller k) and the per-k scores."""
    M = _matrix(M)
    n = M.shape[0]
    if not 2 <= k_min <= k_max:
        raise ValidationError(f"need 2 <= k_min <= k_max, got ({k_min}, {k_max})")
    if k_max >= n:
        raise ValidationError(f"k_max={k_max} must be below rows={n}")
    if not sq_distances(M).any():
        raise ValidationError("all rows coincide; silhouette is undefined")
    A = knn_similarity(M, min(k_neighbors, n - 1))
    scores = {}
    for k in range(k_min, k_max + 1):
        scores[k] = spectral_clustering(A, k, k, seed).silhouette
        log.debug("k=%d silhouette=%.4f", k, scores[k])
    best = max(scores, key=lambda k: (scores[k], -k))
    return best, scores
