"""Exact t-SNE (O(N^2) affinities, plain gradient descent with momentum)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ValidationError
from .clustering import sq_distances
from .topics import _matrix

EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
LEARNING_RATE = 200.0


@dataclass
class TsneResult:
    Y: np.ndarray
    kl: list[float] = field(default_factory=list, repr=False)


def _row_affinities(d2: np.ndarray, target: float, tol: float = 1e-5, max_steps: int = 100) -> np.ndarray:
    """Conditional Gaussian affinities whose entropy (nats) matches ``target``."""
    beta, lo, hi = 1.0, 0.0, np.inf
    shifted = d2 - d2.min()
    for _ in range(max_steps):
        p = np.exp(-shifted * beta)
        s = p.sum()
        h = np.log(s) + beta * (shifted * p).sum() / s
        if abs(h - target) < tol:
            break
        if h > target:
            lo = beta
            beta = beta * 2 if hi == np.inf else (beta + hi) / 2
        else:
            hi = beta
            beta = (beta + lo) / 2
    return p / s


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    n = X.shape[0]
    D2 = sq_distances(X)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        others = np.r_[0:i, i + 1:n]
        P[i, others] = _row_affinities(D2[i, others], target)
    P = np.maximum((P + P.T) / (2 * n), 1e-300)
    np.fill_diagonal(P, 0.0)
    return P


def _kl(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    np.fill_diagonal(mask, False)
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


def tsne(X, perplexity: float = 30.0, iters: int = 1000, seed: int = 0) -> TsneResult:
    X = _matrix(X)
    n = X.shape[0]
    if perplexity <= 0:
        raise ValidationError("perplexity must be positive")
    if n < 3 * perplexity:
        raise ValidationError(f"perplexity {perplexity} too large for {n} rows (need rows >= 3*perplexity)")
    P = joint_probabilities(X, perplexity)
    rng = np.random.default_rng(seed)
    Y = rng.normal(scale=1e-4, size=(n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl = []
    for it in range(iters):
        early = it < EXAGGERATION_ITERS
        num = 1.0 / (1.0 + sq_distances(Y))
        np.fill_diagonal(num, 0.0)
        Q = num / num.sum()
        kl.append(_kl(P, Q))
        PQ = ((EXAGGERATION if early else 1.0) * P - Q) * num
        grad = 4.0 * (np.diag(PQ.sum(axis=1)) - PQ) @ Y
        momentum = 0.5 if early else 0.8
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - LEARNING_RATE * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
    num = 1.0 / (1.0 + sq_distances(Y))
    np.fill_diagonal(num, 0.0)
    kl.append(_kl(P, num / num.sum()))
    return TsneResult(Y, kl)
