"""Numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Inputs are assumed validated by the caller: ``weights`` strictly positive,
``rankings`` an ``(N, n)`` int64 array whose rows are permutations of
``range(n)``.
"""

import numpy as np


def _suffix_sums(values):
    # S[:, p] = sum of values[:, p:], accumulated from the tail.
    return np.cumsum(values[:, ::-1], axis=1)[:, ::-1]


def pl_loglik(weights, rankings):
    """Summed Plackett-Luce log-likelihood of ``rankings`` under ``weights``."""
    n = rankings.shape[1]
    if rankings.shape[0] == 0 or n < 2:
        return 0.0
    w = weights[rankings]
    s = _suffix_sums(w)
    return float(np.sum(np.log(w[:, : n - 1]) - np.log(s[:, : n - 1])))


def pl_scores_loss_grad(scores, rankings):
    """Per-row loss ``-log P(ranking | softmax(scores))`` and its score gradient.

    Returns:
        (loss, grad): arrays of shape ``(N,)`` and ``(N, n)``.
    """
    N, n = scores.shape
    loss = np.zeros(N)
    grad = np.zeros((N, n))
    if N == 0 or n < 2:
        return loss, grad
    rows = np.arange(N)[:, None]
    with np.errstate(all="ignore"):
        # non-finite scores propagate to the caller, which checks for them
        return _scores_loss_grad(scores, rankings, rows, n, grad)


def _scores_loss_grad(scores, rankings, rows, n, grad):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)[rows, rankings]
    s = _suffix_sums(e)[:, : n - 1]
    loss = np.sum(np.log(s) - shifted[rows, rankings][:, : n - 1], axis=1)
    cum_inv = np.cumsum(1.0 / s, axis=1)
    coef = np.concatenate([cum_inv, cum_inv[:, -1:]], axis=1)
    g_sorted = e * coef
    g_sorted[:, : n - 1] -= 1.0
    grad[rows, rankings] = g_sorted
    return loss, grad


def mm_denominators(weights, rankings):
    """For each item, sum of ``1 / S`` over every choice event it takes part in."""
    N, n = rankings.shape
    denom = np.zeros(n)
    if N == 0 or n < 2:
        return denom
    s = _suffix_sums(weights[rankings])[:, : n - 1]
    cum_inv = np.cumsum(1.0 / s, axis=1)
    coef = np.concatenate([cum_inv, cum_inv[:, -1:]], axis=1)
    np.add.at(denom, rankings.ravel(), coef.ravel())
    return denom


def sample_rankings(weights, uniforms):
    """Sequential draws without replacement, one row of ``uniforms`` per ranking.

    ``uniforms`` has shape ``(N, n - 1)``; the last position is forced.
    """
    n = weights.shape[0]
    N = uniforms.shape[0]
    out = np.empty((N, n), dtype=np.int64)
    remaining = np.tile(weights, (N, 1))
    rows = np.arange(N)
    for p in range(n - 1):
        cum = np.cumsum(remaining, axis=1)
        target = uniforms[:, p] * cum[:, -1]
        hit = (cum > target[:, None]) & (remaining > 0.0)
        # rounding can leave no hit; fall back to the last remaining item
        last = n - 1 - np.argmax((remaining > 0.0)[:, ::-1], axis=1)
        choice = np.where(hit.any(axis=1), np.argmax(hit, axis=1), last)
        out[:, p] = choice
        remaining[rows, choice] = 0.0
    if n >= 1:
        out[:, n - 1] = np.argmax(remaining > 0.0, axis=1)
    return out


def average_overlap_batch(a, b):
    """Row-wise average overlap between two ``(N, n)`` ranking arrays."""
    N, n = a.shape
    if N == 0:
        return np.zeros(0)
    pos_b = np.empty_like(b)
    pos_b[np.arange(N)[:, None], b] = np.arange(n)
    # item a[k] joins the shared prefix at depth max(k, pos_b(a[k])) + 1 and
    # stays for every deeper prefix
    enter = np.maximum(np.arange(n), pos_b[np.arange(N)[:, None], a])
    harmonic = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, n + 1))])
    return np.sum(harmonic[n] - harmonic[enter], axis=1) / n
