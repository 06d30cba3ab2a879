"""Plackett-Luce probabilities, likelihood, loss and score gradients.

A ranking is a permutation of class indices ordered from most to least
preferred. Weights live on the open probability simplex; scores are
unconstrained logits mapped onto it by :func:`softmax`.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ._backend import kernels

__all__ = [
    "as_ranking",
    "as_rankings",
    "check_weights",
    "log_likelihood",
    "loss_gradient_scores",
    "permutation_probability",
    "pl_loss",
    "rank_from_weights",
    "softmax",
]

SIMPLEX_ATOL = 1e-9


def check_weights(weights, atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Return ``weights`` as a float64 array, raising if off the open simplex."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w <= 0.0):
        raise ValueError(f"weights must be strictly positive, got min {w.min()!r}")
    if abs(w.sum() - 1.0) > atol:
        raise ValueError(f"weights must sum to 1 (within {atol}), got {w.sum()!r}")
    return w


def as_ranking(ranking, n: int | None = None) -> np.ndarray:
    """Validate a single ranking and return it as an int64 array."""
    r = np.asarray(ranking)
    if r.ndim != 1:
        raise ValueError("a ranking must be a 1-d sequence of class indices")
    if r.size and not np.issubdtype(r.dtype, np.integer):
        raise ValueError("ranking entries must be integers")
    r = r.astype(np.int64, copy=False)
    if n is not None and r.size != n:
        raise ValueError(f"ranking has length {r.size}, expected {n}")
    if r.size == 0 or not np.array_equal(np.sort(r), np.arange(r.size)):
        raise ValueError(f"not a permutation of 0..{r.size - 1}: {r.tolist()}")
    return r


def as_rankings(rankings, n: int) -> np.ndarray:
    """Validate a collection of rankings over ``n`` classes as an ``(N, n)`` array."""
    if isinstance(rankings, np.ndarray) and rankings.ndim == 2:
        arr = rankings
    else:
        rankings = list(rankings)
        if not rankings:
            return np.empty((0, n), dtype=np.int64)
        try:
            arr = np.asarray(rankings)
        except ValueError as exc:
            raise ValueError("rankings have inconsistent lengths") from exc
    if arr.size == 0 and arr.ndim <= 2:
        return np.empty((0, n), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValueError(f"rankings must all have length {n}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("ranking entries must be integers")
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    bad = np.any(np.sort(arr, axis=1) != np.arange(n), axis=1)
    if bad.any():
        k = int(np.argmax(bad))
        raise ValueError(f"ranking {k} is not a permutation of 0..{n - 1}: {arr[k].tolist()}")
    return arr


def permutation_probability(weights, ranking) -> float:
    """Probability of ``ranking`` under the Plackett-Luce model with ``weights``.

    Items are drawn one at a time without replacement, each with probability
    proportional to its weight among those still remaining.

    >>> permutation_probability([0.5, 0.3, 0.2], [0, 1, 2])  # doctest: +ELLIPSIS
    0.3...
    """
    w = check_weights(weights)
    r = as_ranking(ranking, w.size)
    prob = 1.0
    remaining = float(np.sum(w[r]))
    for item in r[:-1]:
        prob *= w[item] / remaining
        remaining -= w[item]
    return prob


def log_likelihood(weights, rankings: Sequence) -> float:
    """Sum of log Plackett-Luce probabilities of independent ``rankings``.

    Evaluated in the log domain. An empty collection gives 0.
    """
    w = check_weights(weights)
    arr = as_rankings(rankings, w.size)
    return kernels.pl_loglik(w, arr)


def pl_loss(weights, rankings: Sequence) -> float:
    """Negative log-likelihood; the training loss for ranking labels."""
    return -log_likelihood(weights, rankings)


def softmax(scores) -> np.ndarray:
    """Map finite logits onto the simplex, shifting by the max to avoid overflow."""
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    # gaps beyond ~745 underflow to 0; keep the output strictly positive
    return np.maximum(e / e.sum(axis=-1, keepdims=True), np.finfo(np.float64).tiny)


def rank_from_weights(weights) -> np.ndarray:
    """Class indices by descending weight, ties broken by ascending index."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    return np.argsort(-w, kind="stable").astype(np.int64)


def loss_gradient_scores(scores, ranking) -> np.ndarray:
    """Gradient of ``pl_loss(softmax(scores), [ranking])`` with respect to scores."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or not np.all(np.isfinite(s)):
        raise ValueError("scores must be a finite 1-d sequence")
    r = as_ranking(ranking, s.size)
    _, grad = kernels.pl_scores_loss_grad(np.ascontiguousarray(s[None, :]), r[None, :])
    return grad[0]


def scores_loss(scores, ranking) -> float:
    """``pl_loss(softmax(scores), [ranking])`` computed directly from logits."""
    s = np.asarray(scores, dtype=np.float64)
    r = as_ranking(ranking, s.size)
    loss, _ = kernels.pl_scores_loss_grad(np.ascontiguousarray(s[None, :]), r[None, :])
    return float(loss[0])
