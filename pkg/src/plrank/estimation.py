"""Fitting a single Plackett-Luce distribution to a bag of rankings, and sampling from one.

Two fitters are provided. ``fit_mle_mm`` runs the minorization-maximization
fixed point (Hunter, 2004); ``fit_mle_gradient`` runs full-batch gradient
descent on logits. Both maximize the same likelihood and serve as checks on
one another; ``brute_force_mle`` is a grid-search oracle for tiny problems.

Random numbers come from :func:`numpy.random.default_rng` (PCG64), so draws are
reproducible for a given seed and numpy version.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import as_rankings, check_weights, softmax

__all__ = [
    "FitConfig",
    "FitResult",
    "brute_force_mle",
    "fit_mle",
    "fit_mle_gradient",
    "fit_mle_mm",
    "infer_n_classes",
    "mle_exists",
    "sample_ranking",
    "sample_rankings",
]

logger = logging.getLogger(__name__)

# weights are never allowed to reach exactly zero
_WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class FitConfig:
    method: str = "mm"
    max_iters: int = 10_000
    tolerance: float = 1e-9
    smoothing: float = 1e-6
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("mm", "gradient"):
            raise ValueError(f"method must be 'mm' or 'gradient', got {self.method!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if not self.smoothing >= 0:
            raise ValueError("smoothing must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class FitResult:
    weights: np.ndarray
    final_log_likelihood: float
    iterations: int
    converged: bool
    # objective actually maximized, one entry per iterate (index 0 = start)
    trace: list[float]


def infer_n_classes(rankings) -> int:
    rankings = list(rankings)
    if not rankings:
        raise ValueError("at least one ranking is required")
    return len(rankings[0])


def _prepare(rankings):
    if isinstance(rankings, np.ndarray) and rankings.ndim == 2:
        if rankings.shape[0] == 0:
            raise ValueError("at least one ranking is required")
        n = rankings.shape[1]
    else:
        rankings = list(rankings)
        n = infer_n_classes(rankings)
    return as_rankings(rankings, n)


def _win_counts(arr: np.ndarray) -> np.ndarray:
    n = arr.shape[1]
    return np.bincount(arr[:, : n - 1].ravel(), minlength=n).astype(np.float64)


def mle_exists(rankings) -> bool:
    """True when the unregularized likelihood has a finite maximizer.

    That holds exactly when the "ranked above" digraph over items is strongly
    connected: every item can be reached from every other by following
    edges from winners to the items they beat.
    """
    arr = _prepare(rankings)
    n = arr.shape[1]
    if n == 1:
        return True
    beats = np.zeros((n, n), dtype=bool)
    for p in range(n - 1):
        for q in range(p + 1, n):
            beats[arr[:, p], arr[:, q]] = True
    reach = beats | np.eye(n, dtype=bool)
    for _ in range(int(np.ceil(np.log2(n))) + 1):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def _penalized_mm_objective(w, arr, smoothing):
    """Log-likelihood plus ``smoothing * sum(log w)``, summed with ``math.fsum``.

    Compensated summation keeps the trace accurate enough to check
    monotonicity near convergence, where true gains are far below one ulp of
    a naive running sum. The penalty is scale-invariant, so renormalizing
    ``w`` leaves the value unchanged.
    """
    n = arr.shape[1]
    picked = w[arr]
    suffix = np.cumsum(picked[:, ::-1], axis=1)[:, ::-1]
    terms = [np.log(picked[:, : n - 1]).ravel(), -np.log(suffix[:, : n - 1]).ravel()]
    if smoothing:
        terms.append(smoothing * np.log(w / w.sum()))
    return math.fsum(np.concatenate(terms))


def fit_mle_mm(rankings, config: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood weights by minorization-maximization.

    Each sweep sets ``w_i <- (W_i + s) / (D_i + n * s)`` and renormalizes, where
    ``W_i`` counts choice events item ``i`` wins and ``D_i`` sums the inverse
    candidate-set weight over every event item ``i`` takes part in. With
    ``s = smoothing > 0`` this ascends the likelihood plus a symmetric
    Dirichlet-style ``s * sum(log w_i)`` term; with ``s = 0`` it is the plain
    MLE and every sweep is guaranteed not to lower the likelihood.

    When ``smoothing == 0`` and no finite MLE exists (see :func:`mle_exists`),
    the sweep still runs but ``converged`` is always False; weights are kept
    strictly positive rather than collapsing to zero.
    """
    config = config or FitConfig()
    arr = _prepare(rankings)
    n = arr.shape[1]
    if n == 1:
        return FitResult(np.ones(1), 0.0, 0, True, [0.0])
    s = config.smoothing
    wins = _win_counts(arr)
    degenerate = s == 0 and not mle_exists(arr)
    if degenerate:
        logger.warning("no finite MLE exists for these rankings; use smoothing > 0")

    w = np.full(n, 1.0 / n)
    trace = [_penalized_mm_objective(w, arr, s)]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        denom = kernels.mm_denominators(w, arr)
        new = (wins + s) / (denom + n * s)
        new = np.maximum(new / new.sum(), _WEIGHT_FLOOR)
        new /= new.sum()
        delta = float(np.max(np.abs(new - w)))
        w = new
        trace.append(_penalized_mm_objective(w, arr, s))
        if delta < config.tolerance:
            converged = not degenerate
            break
    return FitResult(w, kernels.pl_loglik(w, arr), it, converged, trace)


def fit_mle_gradient(rankings, config: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood weights by full-batch gradient descent on logits.

    Minimizes the mean negative log-likelihood plus ``smoothing * ||theta||^2 / N``
    (the penalty on the summed loss is ``smoothing * ||theta||^2``) starting
    from ``theta = 0``. Step sizes start at ``learning_rate`` and are halved
    by backtracking until the Armijo condition holds, so the objective never
    increases.
    """
    config = config or FitConfig(method="gradient")
    arr = _prepare(rankings)
    N, n = arr.shape
    if n == 1:
        return FitResult(np.ones(1), 0.0, 0, True, [0.0])
    s = config.smoothing
    degenerate = s == 0 and not mle_exists(arr)
    if degenerate:
        logger.warning("no finite MLE exists for these rankings; use smoothing > 0")

    def objective(theta):
        loss, grad = kernels.pl_scores_loss_grad(
            np.ascontiguousarray(np.broadcast_to(theta, (N, n))), arr
        )
        f = float(loss.sum()) + s * float(theta @ theta)
        g = grad.sum(axis=0) + 2.0 * s * theta
        return f / N, g / N

    theta = np.zeros(n)
    f, g = objective(theta)
    w = softmax(theta)
    trace = [-f * N]
    step = config.learning_rate
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        gg = float(g @ g)
        while True:
            cand = theta - step * g
            f_new, g_new = objective(cand)
            if f_new <= f - 0.5 * step * gg or step < 1e-12:
                break
            step *= 0.5
        theta, f, g = cand, f_new, g_new
        new = softmax(theta)
        delta = float(np.max(np.abs(new - w)))
        w = new
        trace.append(-f * N)
        # let the step grow back after successful iterations
        step = min(step * 2.0, config.learning_rate)
        if delta < config.tolerance:
            converged = not degenerate
            break
    w = np.maximum(w, _WEIGHT_FLOOR)
    w /= w.sum()
    return FitResult(w, kernels.pl_loglik(w, arr), it, converged, trace)


def fit_mle(rankings, config: FitConfig | None = None) -> FitResult:
    """Dispatch on ``config.method``."""
    config = config or FitConfig()
    if config.method == "gradient":
        return fit_mle_gradient(rankings, config)
    return fit_mle_mm(rankings, config)


def brute_force_mle(rankings, grid_steps: int = 200) -> np.ndarray:
    """Best interior point of a regular simplex grid, for ``n <= 3``.

    Only meant as a test oracle; it shares no code with the iterative fitters.
    """
    rankings = [tuple(int(i) for i in r) for r in rankings]
    if not rankings:
        raise ValueError("at least one ranking is required")
    n = len(rankings[0])
    if n > 3:
        raise ValueError("brute_force_mle supports at most 3 classes")
    if grid_steps < 10:
        raise ValueError("grid_steps must be >= 10")
    for r in rankings:
        if sorted(r) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {r}")
    if n == 1:
        return np.ones(1)

    counts: dict[tuple, int] = {}
    for r in rankings:
        counts[r] = counts.get(r, 0) + 1

    ticks = np.arange(1, grid_steps)
    if n == 2:
        grid = np.stack([ticks, grid_steps - ticks], axis=1)
    else:
        grid = np.array(
            [(i, j, grid_steps - i - j) for i, j in itertools.product(ticks, ticks) if i + j < grid_steps]
        )
    grid = grid / grid_steps

    total = np.zeros(grid.shape[0])
    for r, c in counts.items():
        logp = np.zeros(grid.shape[0])
        for i in range(n - 1):
            logp += np.log(grid[:, r[i]]) - np.log(grid[:, list(r[i:])].sum(axis=1))
        total += c * logp
    return grid[int(np.argmax(total))]


def sample_rankings(weights, count: int, rng) -> np.ndarray:
    """Draw ``count`` rankings as an ``(count, n)`` int64 array.

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed. Each
    ranking consumes ``n - 1`` uniforms, so results do not depend on which
    kernel backend is active.
    """
    w = check_weights(weights)
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(rng)
    uniforms = rng.random((count, w.size - 1))
    return kernels.sample_rankings(w, uniforms)


def sample_ranking(weights, rng) -> np.ndarray:
    """Draw one ranking by sequential choice without replacement."""
    return sample_rankings(weights, 1, rng)[0]
