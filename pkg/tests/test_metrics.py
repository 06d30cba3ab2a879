import itertools
import math

import numpy as np
import pytest

from plrank.metrics import (
    EvaluationReport,
    average_overlap,
    distribution_entropy,
    evaluate,
    expected_random_overlap,
    kendall_tau,
)

A, B, C = 0, 1, 2


def overlap_by_sets(a, b):
    n = len(a)
    return sum(len(set(a[:i]) & set(b[:i])) / i for i in range(1, n + 1)) / n


def tau_by_pairs(a, b):
    pa = {x: i for i, x in enumerate(a)}
    pb = {x: i for i, x in enumerate(b)}
    s = 0
    for x, y in itertools.combinations(range(len(a)), 2):
        s += np.sign(pa[x] - pa[y]) * np.sign(pb[x] - pb[y])
    return s / math.comb(len(a), 2)


class TestAverageOverlap:
    def test_worked_example(self):
        assert average_overlap([A, B, C], [A, C, B]) == pytest.approx(5 / 6, abs=1e-12)

    def test_identical_and_reversed(self):
        assert average_overlap([A, B, C], [A, B, C]) == 1.0
        assert average_overlap([A, B, C], [C, B, A]) == pytest.approx(0.5, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            average_overlap([0, 1], [0, 1, 2])

    @pytest.mark.parametrize("n", range(1, 7))
    def test_exhaustive_properties(self, n):
        perms = list(itertools.permutations(range(n)))
        ref = perms[len(perms) // 3]
        for p in perms:
            v = average_overlap(p, ref)
            assert v == pytest.approx(overlap_by_sets(p, ref), abs=1e-14)
            assert v == pytest.approx(average_overlap(ref, p), abs=1e-15)
            assert 1 / n - 1e-15 <= v <= 1 + 1e-15
            assert (abs(v - 1) < 1e-12) == (p == ref)

    @pytest.mark.parametrize("n", range(3, 7))
    def test_top_weighted(self, n):
        for ref in itertools.permutations(range(n)):
            ref = list(ref)
            top = ref[:]
            top[0], top[1] = top[1], top[0]
            bottom = ref[:]
            bottom[-2], bottom[-1] = bottom[-1], bottom[-2]
            assert average_overlap(ref, top) <= average_overlap(ref, bottom) + 1e-15


class TestKendall:
    def test_examples(self):
        assert kendall_tau([A, B, C], [A, B, C]) == 1.0
        assert kendall_tau([A, B, C], [C, B, A]) == -1.0
        assert kendall_tau([A, B, C], [A, C, B]) == pytest.approx(1 / 3, abs=1e-15)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            kendall_tau([0], [0])

    @pytest.mark.parametrize("n", range(2, 6))
    def test_exhaustive(self, n):
        perms = list(itertools.permutations(range(n)))
        for a in perms:
            for b in perms[:: max(1, len(perms) // 10)]:
                t = kendall_tau(a, b)
                assert t == pytest.approx(tau_by_pairs(a, b), abs=1e-15)
                assert t == kendall_tau(b, a)
                assert (t == 1.0) == (a == b)


class TestEvaluate:
    def test_all_copies(self):
        rep = evaluate({"x": [0, 1, 2]}, {"x": [[0, 1, 2]] * 11})
        assert rep.mean_overlap_accuracy == 1.0 and rep.n_pairs == 11

    def test_two_references(self):
        for mode in ("pair", "instance"):
            rep = evaluate({"x": [A, B, C]}, {"x": [[A, B, C], [A, C, B]]}, mode=mode)
            assert rep.mean_overlap_accuracy == pytest.approx(11 / 12, abs=1e-12)

    def test_instance_mean(self):
        rep = evaluate({"p": [A, B, C], "q": [A, B, C]}, {"p": [[C, B, A]], "q": [[A, B, C]]}, mode="instance")
        assert rep.accuracies == pytest.approx([0.5, 1.0])
        assert rep.mean_overlap_accuracy == pytest.approx(0.75, abs=1e-12)

    def test_modes_differ_with_uneven_coverage(self):
        preds = {"p": [A, B, C], "q": [A, B, C]}
        refs = {"p": [[C, B, A]], "q": [[A, B, C]] * 3}
        pair = evaluate(preds, refs, mode="pair")
        inst = evaluate(preds, refs, mode="instance")
        assert pair.mean_overlap_accuracy == pytest.approx((0.5 + 3) / 4)
        assert inst.mean_overlap_accuracy == pytest.approx(0.75)
        assert pair.n_pairs == inst.n_pairs == 4

    def test_mean_matches_units(self, rng):
        preds = {k: rng.permutation(5) for k in range(30)}
        refs = {k: [rng.permutation(5) for _ in range(1 + k % 4)] for k in range(30)}
        for mode in ("pair", "instance"):
            rep = evaluate(preds, refs, mode=mode)
            assert rep.mean_overlap_accuracy == pytest.approx(math.fsum(rep.accuracies) / len(rep.accuracies), abs=1e-12)

    def test_kendall_and_entropy(self):
        rep = evaluate({"x": [A, B, C]}, {"x": [[A, C, B]]}, distributions={"x": [1 / 3] * 3})
        assert rep.mean_kendall_tau == pytest.approx(1 / 3)
        assert rep.mean_entropy == pytest.approx(math.log(3))

    def test_missing_references(self):
        with pytest.raises(ValueError):
            evaluate({"x": [0, 1]}, {"x": []})
        with pytest.raises(ValueError):
            evaluate({"x": [0, 1]}, {})

    def test_report_text_fields(self):
        rep = evaluate({"x": [A, B, C]}, {"x": [[A, C, B]]})
        text = rep.to_text()
        for key in ("mean_overlap_accuracy", "n_instances", "n_pairs", "mean_kendall_tau", "mean_entropy"):
            assert f"{key}: " in text
        assert isinstance(rep, EvaluationReport)


class TestEntropy:
    def test_values(self):
        assert distribution_entropy([0.2] * 5) == pytest.approx(math.log(5), abs=1e-12)
        eps = 1e-12
        assert distribution_entropy([1 - 4 * eps] + [eps] * 4) == pytest.approx(0.0, abs=1e-9)
        assert distribution_entropy([0.5, 0.5, 0, 0, 0]) == pytest.approx(math.log(2), abs=1e-15)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            distribution_entropy([1.5, -0.5])


class TestRandomBaseline:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_closed_form(self, n):
        assert expected_random_overlap(n) == (n + 1) / (2 * n)

    def test_brute_force_n5(self):
        perms = list(itertools.permutations(range(5)))
        brute = math.fsum(overlap_by_sets(list(range(5)), p) for p in perms) / len(perms)
        assert brute == pytest.approx(0.6, abs=1e-12)
        assert expected_random_overlap(5) == 0.6

    def test_range(self):
        for n in (0, 9):
            with pytest.raises(ValueError):
                expected_random_overlap(n)
