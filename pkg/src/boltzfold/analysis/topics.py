"""Nonnegative matrix factorisation by multiplicative updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ValidationError

DEFAULT_TOPICS = 25


@dataclass
class TopicModel:
    M: np.ndarray
    H: np.ndarray
    topics: int
    final_objective: float
    history: list[float] = field(default_factory=list, repr=False)
    n_iter: int = 0


def _matrix(X) -> np.ndarray:
    values = getattr(X, "values", X)
    return np.asarray(values, dtype=float)


def frobenius(X: np.ndarray, M: np.ndarray, H: np.ndarray) -> float:
    return float(np.linalg.norm(X - M @ H))


def _update(A: np.ndarray, num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # entries with a zero denominator have zero gradient from the quadratic term; leave them
    out = A.copy()
    mask = den > 0
    out[mask] = A[mask] * num[mask] / den[mask]
    return out


def nmf(X, topics: int = DEFAULT_TOPICS, max_iters: int = 500, tol: float = 1e-6, seed: int = 0) -> TopicModel:
    """Lee-Seung updates minimising ``||X - M H||_F``.

    Stops when the relative objective improvement drops below ``tol`` (pass
    ``tol=0`` to run all ``max_iters`` updates). ``history[0]`` is the
    objective at initialisation.
    """
    X = _matrix(X)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D matrix")
    if not np.isfinite(X).all():
        raise ValidationError("X has non-finite entries")
    if (X < 0).any():
        raise ValidationError("X has negative entries; NMF needs a nonnegative matrix")
    n, d = X.shape
    if not 1 <= topics <= min(n, d):
        raise ValidationError(f"topics={topics} must lie in [1, min(rows, cols)={min(n, d)}]")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(X.mean() / topics) if X.mean() > 0 else 1.0
    M = rng.uniform(size=(n, topics)) * scale
    H = rng.uniform(size=(topics, d)) * scale
    history = [frobenius(X, M, H)]
    it = 0
    for it in range(1, max_iters + 1):
        H = _update(H, M.T @ X, M.T @ M @ H)
        M = _update(M, X @ H.T, M @ (H @ H.T))
        history.append(frobenius(X, M, H))
        prev, cur = history[-2], history[-1]
        if tol > 0 and (prev == 0 or (prev - cur) <= tol * prev):
            break
    return TopicModel(M, H, topics, history[-1], history, it)
