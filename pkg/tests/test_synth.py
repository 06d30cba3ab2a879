import itertools
from collections import defaultdict

import numpy as np
import pytest

from plrank.estimation import fit_mle_mm
from plrank.metrics import average_overlap
from plrank.synth import DEFAULT_COVERAGE, SyntheticConfig, generate_dataset, instance_key, split_by_object


def by_instance(data):
    groups = defaultdict(list)
    for inst in data:
        groups[instance_key(inst)].append(inst)
    return groups


class TestConfig:
    def test_defaults(self):
        c = SyntheticConfig()
        assert (c.n_classes, c.input_dim, c.n_objects, c.orientations_per_object, c.n_labellers) == (5, 8, 102, 4, 11)
        assert c.labeller_coverage == pytest.approx(4466 / 4543)
        assert DEFAULT_COVERAGE == c.labeller_coverage

    @pytest.mark.parametrize(
        "kwargs,field",
        [
            ({"n_objects": 0}, "n_objects"),
            ({"n_labellers": 0}, "n_labellers"),
            ({"labeller_coverage": 0.0}, "labeller_coverage"),
            ({"labeller_temperature_range": (2.0, 1.0)}, "labeller_temperature_range"),
            ({"labeller_bias_scale": -1.0}, "labeller_bias_scale"),
        ],
    )
    def test_invalid_names_field(self, kwargs, field):
        with pytest.raises(ValueError, match=field):
            SyntheticConfig(**kwargs)

    def test_dict_round_trip(self):
        c = SyntheticConfig(n_objects=3, labeller_temperature_range=(0.5, 2.0))
        assert SyntheticConfig.from_dict(c.to_dict()) == c
        with pytest.raises(ValueError):
            SyntheticConfig.from_dict({"bogus": 1})


class TestGenerate:
    def test_full_coverage_count(self):
        c = SyntheticConfig(n_objects=7, orientations_per_object=3, n_labellers=5, labeller_coverage=1.0)
        data, truth = generate_dataset(c)
        assert len(data) == 7 * 3 * 5
        assert len(truth.instance_weights) == 21

    def test_valid_records(self):
        data, truth = generate_dataset(SyntheticConfig(n_objects=10))
        for inst in data:
            assert sorted(inst.ranking.tolist()) == list(range(5))
            assert inst.features.shape == (8,) and np.all(np.isfinite(inst.features))
        for w in truth.instance_weights.values():
            assert np.all(w > 0) and w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_features_shared_within_instance(self):
        data, _ = generate_dataset(SyntheticConfig(n_objects=4))
        for insts in by_instance(data).values():
            for other in insts[1:]:
                np.testing.assert_array_equal(other.features, insts[0].features)

    def test_reproducible(self):
        a, ta = generate_dataset(SyntheticConfig(n_objects=5, seed=3))
        b, tb = generate_dataset(SyntheticConfig(n_objects=5, seed=3))
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert x.labeller_id == y.labeller_id
            np.testing.assert_array_equal(x.features, y.features)
            np.testing.assert_array_equal(x.ranking, y.ranking)
        np.testing.assert_array_equal(ta.W, tb.W)

    def test_identical_labellers_recover_truth(self):
        c = SyntheticConfig.low_noise(
            n_objects=2, orientations_per_object=2, n_labellers=1000, labeller_coverage=1.0, feature_noise=0.0
        )
        data, truth = generate_dataset(c)
        for key, insts in by_instance(data).items():
            w = truth.instance_weights[key]
            R = np.stack([i.ranking for i in insts])
            first = np.bincount(R[:, 0], minlength=5) / len(R)
            assert np.max(np.abs(first - w)) < 0.05
            assert np.max(np.abs(fit_mle_mm(R).weights - w)) < 0.05

    def test_bias_lowers_agreement(self):
        means = []
        for scale in (0.0, 0.5, 1.0):
            c = SyntheticConfig(labeller_temperature_range=(1.0, 1.0), labeller_bias_scale=scale, labeller_coverage=1.0)
            data, _ = generate_dataset(c)
            vals = [
                average_overlap(a.ranking, b.ranking)
                for insts in by_instance(data).values()
                for a, b in itertools.combinations(insts, 2)
            ]
            means.append(np.mean(vals))
        assert means[0] >= means[1] >= means[2]

    def test_complexity_spread(self):
        data, truth = generate_dataset(SyntheticConfig(n_objects=20, complexity_spread=0.5))
        assert np.all((truth.complexity >= 0.5) & (truth.complexity <= 1.5))
        assert np.ptp(truth.complexity) > 0


class TestSplit:
    def make(self, n_objects):
        data, _ = generate_dataset(SyntheticConfig(n_objects=n_objects, orientations_per_object=2, n_labellers=3))
        return data

    def test_counts(self):
        train, test = split_by_object(self.make(10), 0.8, seed=1)
        assert len({i.object_id for i in train}) == 8
        assert len({i.object_id for i in test}) == 2

    def test_disjoint_and_complete(self):
        data = self.make(13)
        train, test = split_by_object(data, 0.7, seed=2)
        assert not {i.object_id for i in train} & {i.object_id for i in test}
        assert len(train) + len(test) == len(data)

    def test_reproducible(self):
        data = self.make(10)
        a = split_by_object(data, 0.8, seed=5)
        b = split_by_object(data, 0.8, seed=5)
        assert [i.object_id for i in a[1]] == [i.object_id for i in b[1]]

    def test_errors(self):
        with pytest.raises(ValueError):
            split_by_object(self.make(1), 0.8)
        with pytest.raises(ValueError):
            split_by_object(self.make(4), 1.0)
