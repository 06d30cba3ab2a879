import itertools
from collections import Counter

import numpy as np
import pytest

from plrank.core import log_likelihood, permutation_probability
from plrank.estimation import (
    FitConfig,
    brute_force_mle,
    fit_mle,
    fit_mle_gradient,
    fit_mle_mm,
    mle_exists,
    sample_ranking,
    sample_rankings,
)

THREE_TO_ONE = [(0, 1)] * 3 + [(1, 0)]


def random_dataset(seed, n=3):
    """A small dataset for which a finite MLE exists."""
    rng = np.random.default_rng(seed)
    while True:
        w = rng.dirichlet(np.ones(n) * 2)
        R = sample_rankings(w, int(rng.integers(20, 80)), rng)
        if mle_exists(R):
            return R


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"method": "newton"}, {"max_iters": 0}, {"tolerance": 0}, {"smoothing": -1}, {"learning_rate": 0}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            FitConfig(**kwargs)


class TestMM:
    def test_binomial_closed_form(self):
        res = fit_mle_mm(THREE_TO_ONE, FitConfig(smoothing=0))
        assert res.converged
        np.testing.assert_allclose(res.weights, [0.75, 0.25], atol=1e-6)
        assert res.final_log_likelihood == pytest.approx(3 * np.log(0.75) + np.log(0.25), abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fit_mle_mm([])

    def test_invalid_ranking_rejected(self):
        with pytest.raises(ValueError):
            fit_mle_mm([(0, 1, 1)])

    def test_identical_rankings_unsmoothed_do_not_converge(self):
        res = fit_mle_mm([(2, 0, 1)] * 5, FitConfig(smoothing=0, max_iters=500))
        assert not res.converged
        assert np.all(res.weights > 0)
        assert int(np.argmax(res.weights)) == 2

    def test_identical_rankings_smoothed_are_finite(self):
        res = fit_mle_mm([(2, 0, 1)] * 5)
        assert np.all(res.weights > 0) and np.all(np.isfinite(res.weights))
        assert res.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert res.weights.argsort()[::-1].tolist() == [2, 0, 1]

    def test_recovers_truth(self):
        truth = np.array([0.5, 0.3, 0.2])
        R = sample_rankings(truth, 2000, np.random.default_rng(3))
        res = fit_mle_mm(R)
        assert np.max(np.abs(res.weights - truth)) < 0.05

    @pytest.mark.parametrize("seed", range(10))
    def test_monotone(self, seed):
        R = random_dataset(seed, n=4)
        res = fit_mle_mm(R, FitConfig(smoothing=0))
        assert np.all(np.diff(res.trace) >= -1e-12)

    def test_monotone_penalized_objective(self):
        res = fit_mle_mm([(2, 0, 1)] * 5 + [(0, 2, 1)], FitConfig(smoothing=0.5))
        assert res.converged
        assert np.all(np.diff(res.trace) >= -1e-12)

    def test_single_class(self):
        res = fit_mle_mm([(0,), (0,)])
        assert res.weights.tolist() == [1.0] and res.converged

    def test_iterations_bounded(self):
        res = fit_mle_mm(random_dataset(1), FitConfig(max_iters=3))
        assert res.iterations <= 3


class TestGradient:
    def test_binomial_closed_form(self):
        res = fit_mle_gradient(THREE_TO_ONE, FitConfig(method="gradient"))
        assert res.converged
        assert res.weights[0] == pytest.approx(0.75, abs=1e-3)

    def test_single_ranking_smoothed(self):
        res = fit_mle_gradient([(1, 2, 0)], FitConfig(method="gradient", smoothing=0.1))
        assert res.converged
        assert np.all(res.weights > 0)
        assert res.weights.argsort()[::-1].tolist() == [1, 2, 0]

    def test_objective_never_increases(self):
        res = fit_mle_gradient(random_dataset(4), FitConfig(method="gradient", smoothing=0.01))
        # trace stores the negated penalized objective, so it must be non-decreasing
        assert np.all(np.diff(res.trace) >= -1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_agrees_with_mm(self, seed):
        R = random_dataset(100 + seed)
        mm = fit_mle_mm(R, FitConfig(smoothing=0))
        gd = fit_mle_gradient(R, FitConfig(method="gradient", smoothing=0))
        assert mm.converged and gd.converged
        assert np.max(np.abs(mm.weights - gd.weights)) < 1e-3
        assert abs(mm.final_log_likelihood - gd.final_log_likelihood) < 1e-4

    def test_dispatch(self):
        a = fit_mle(THREE_TO_ONE, FitConfig(method="gradient"))
        b = fit_mle_gradient(THREE_TO_ONE, FitConfig(method="gradient"))
        np.testing.assert_array_equal(a.weights, b.weights)


class TestBruteForce:
    def test_binomial(self):
        w = brute_force_mle(THREE_TO_ONE, grid_steps=1000)
        assert abs(w[0] - 0.75) <= 1e-3

    def test_symmetric(self):
        w = brute_force_mle([(0, 1), (1, 0)] * 4, grid_steps=100)
        assert abs(w[0] - 0.5) <= 1 / 100

    @pytest.mark.parametrize("seed", range(5))
    def test_mm_dominates_grid(self, seed):
        R = random_dataset(seed)
        grid = brute_force_mle(R, grid_steps=300)
        mm = fit_mle_mm(R, FitConfig(smoothing=0))
        assert log_likelihood(grid, R) <= mm.final_log_likelihood + 1e-3

    def test_rejects_large_n(self):
        with pytest.raises(ValueError):
            brute_force_mle([(0, 1, 2, 3)])

    def test_rejects_coarse_grid(self):
        with pytest.raises(ValueError):
            brute_force_mle(THREE_TO_ONE, grid_steps=5)


class TestMLEExists:
    def test_cases(self):
        assert mle_exists(THREE_TO_ONE)
        assert not mle_exists([(0, 1)] * 3)
        assert not mle_exists([(0, 1, 2), (0, 2, 1)])
        assert mle_exists([(0, 1, 2), (2, 1, 0)])


class TestSampling:
    def test_near_degenerate(self):
        eps = 1e-9
        R = sample_rankings([1 - 2 * eps, eps, eps], 10_000, np.random.default_rng(0))
        assert np.mean(R[:, 0] == 0) >= 0.9999

    def test_frequencies(self):
        w = np.array([0.5, 0.3, 0.2])
        R = sample_rankings(w, 100_000, np.random.default_rng(99))
        counts = Counter(map(tuple, R.tolist()))
        l1 = sum(abs(counts[p] / len(R) - permutation_probability(w, p)) for p in itertools.permutations(range(3)))
        assert l1 < 0.01
        np.testing.assert_allclose(np.bincount(R[:, 0], minlength=3) / len(R), w, atol=0.01)

    def test_reproducible(self):
        a = sample_rankings([0.2, 0.3, 0.5], 50, np.random.default_rng(5))
        b = sample_rankings([0.2, 0.3, 0.5], 50, 5)
        np.testing.assert_array_equal(a, b)

    def test_single_draw(self):
        r = sample_ranking([0.25] * 4, np.random.default_rng(1))
        assert sorted(r.tolist()) == [0, 1, 2, 3]

    def test_zero_count(self):
        assert sample_rankings([0.5, 0.5], 0, 0).shape == (0, 2)

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            sample_rankings([0.5, 0.5, 0.0], 1, 0)


def test_consistency_as_sample_grows():
    rng = np.random.default_rng(2718)
    truth = rng.dirichlet(np.ones(5) * 2)
    errs = []
    for N in (100, 1000, 10_000):
        R = sample_rankings(truth, N, np.random.default_rng(N))
        errs.append(np.max(np.abs(fit_mle_mm(R).weights - truth)))
    steps = [errs[1] <= errs[0], errs[2] <= errs[1], errs[2] <= errs[0]]
    assert sum(steps) >= 2
    assert errs[-1] < 0.02
