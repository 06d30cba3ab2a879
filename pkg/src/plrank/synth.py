"""Synthetic ranking-label datasets with several biased labellers.

Each object has an archetype feature vector; each of its orientations
perturbs it. A hidden linear map turns features into true class scores.
Every labeller sees those scores through a personal temperature and an
additive offset, and ranks the classes by sampling from the resulting
Plackett-Luce distribution.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ._backend import kernels
from .core import softmax

__all__ = [
    "GroundTruth",
    "LabelledInstance",
    "SyntheticConfig",
    "generate_dataset",
    "instance_key",
    "split_by_object",
]

# 4466 labelled pairs from 413 pictures and 11 labellers
DEFAULT_COVERAGE = 4466 / (413 * 11)


@dataclass
class LabelledInstance:
    object_id: str
    orientation_id: str
    labeller_id: str
    features: np.ndarray
    ranking: np.ndarray


def instance_key(inst) -> tuple[str, str]:
    return (inst.object_id, inst.orientation_id)


@dataclass(frozen=True)
class SyntheticConfig:
    n_classes: int = 5
    input_dim: int = 8
    n_objects: int = 102
    orientations_per_object: int = 4
    n_labellers: int = 11
    labeller_coverage: float = DEFAULT_COVERAGE
    labeller_temperature_range: tuple[float, float] = (0.8, 1.25)
    labeller_bias_scale: float = 0.1
    feature_noise: float = 0.05
    orientation_scale: float = 0.3
    signal_scale: float = 2.0
    # per-object multiplier spread on labeller offsets; 0 keeps every object alike
    complexity_spread: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_classes", "input_dim", "n_objects", "orientations_per_object", "n_labellers"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)!r}")
        if not 0 < self.labeller_coverage <= 1:
            raise ValueError(f"labeller_coverage must lie in (0, 1], got {self.labeller_coverage!r}")
        lo, hi = self.labeller_temperature_range
        if not 0 < lo <= hi:
            raise ValueError(f"labeller_temperature_range must satisfy 0 < lo <= hi, got {(lo, hi)!r}")
        for name in ("labeller_bias_scale", "feature_noise", "orientation_scale", "signal_scale"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not 0 <= self.complexity_spread < 1:
            raise ValueError(f"complexity_spread must lie in [0, 1), got {self.complexity_spread!r}")

    @classmethod
    def low_noise(cls, **overrides) -> SyntheticConfig:
        """Identical labellers: unit temperature, no offsets."""
        params = {"labeller_temperature_range": (1.0, 1.0), "labeller_bias_scale": 0.0}
        params.update(overrides)
        return cls(**params)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["labeller_temperature_range"] = list(self.labeller_temperature_range)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> SyntheticConfig:
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "labeller_temperature_range" in data:
            data["labeller_temperature_range"] = tuple(data["labeller_temperature_range"])
        return cls(**data)


@dataclass
class GroundTruth:
    W: np.ndarray
    b: np.ndarray
    temperatures: np.ndarray
    offsets: np.ndarray
    complexity: np.ndarray
    # (object_id, orientation_id) -> true class distribution
    instance_weights: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "labeller_temperatures": self.temperatures.tolist(),
            "labeller_offsets": self.offsets.tolist(),
            "object_complexity": self.complexity.tolist(),
            "instances": [
                {"object_id": o, "orientation_id": r, "weights": w.tolist()}
                for (o, r), w in self.instance_weights.items()
            ],
        }


def generate_dataset(config: SyntheticConfig) -> tuple[list[LabelledInstance], GroundTruth]:
    """Draw a labelled dataset and the latent truth behind it.

    All random quantities are drawn in a fixed order from one generator, and
    scale parameters only multiply standard draws. Two configs that differ in
    a scale (bias, noise, temperature range) therefore share their randomness.
    """
    c = config
    rng = np.random.default_rng(c.seed)
    d, n = c.input_dim, c.n_classes

    W = rng.standard_normal((n, d)) * (c.signal_scale / np.sqrt(d))
    b = rng.standard_normal(n) * 0.5
    lo, hi = c.labeller_temperature_range
    temperatures = lo + (hi - lo) * rng.random(c.n_labellers)
    offsets = rng.standard_normal((c.n_labellers, n)) * c.labeller_bias_scale
    complexity = 1.0 + c.complexity_spread * (2.0 * rng.random(c.n_objects) - 1.0)
    archetypes = rng.standard_normal((c.n_objects, d))

    obj_width = len(str(c.n_objects - 1))
    lab_width = len(str(c.n_labellers - 1))
    data: list[LabelledInstance] = []
    truth: dict = {}
    for o in range(c.n_objects):
        object_id = f"obj{o:0{obj_width}d}"
        for r in range(c.orientations_per_object):
            orientation_id = f"ori{r}"
            x = (
                archetypes[o]
                + c.orientation_scale * rng.standard_normal(d)
                + c.feature_noise * rng.standard_normal(d)
            )
            theta = W @ x + b
            truth[(object_id, orientation_id)] = softmax(theta)
            include = rng.random(c.n_labellers) < c.labeller_coverage
            uniforms = rng.random((c.n_labellers, n - 1))
            for lab in range(c.n_labellers):
                if not include[lab]:
                    continue
                theta_l = theta / temperatures[lab] + complexity[o] * offsets[lab]
                ranking = kernels.sample_rankings(softmax(theta_l), uniforms[lab : lab + 1])[0]
                data.append(
                    LabelledInstance(object_id, orientation_id, f"lab{lab:0{lab_width}d}", x.copy(), ranking)
                )
    return data, GroundTruth(W, b, temperatures, offsets, complexity, truth)


def split_by_object(dataset, train_fraction: float = 0.8, seed: int = 0):
    """Partition instances so that each object lands entirely in train or test.

    ``round(train_fraction * n_objects)`` objects (at least 1, at most all but
    one) go to train, chosen by a seeded permutation of the sorted object ids.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    dataset = list(dataset)
    objects = sorted({inst.object_id for inst in dataset})
    if len(objects) < 2:
        raise ValueError("need at least 2 distinct objects to split")
    n_train = min(max(int(round(train_fraction * len(objects))), 1), len(objects) - 1)
    rng = np.random.default_rng(seed)
    chosen = {objects[i] for i in rng.permutation(len(objects))[:n_train]}
    train = [inst for inst in dataset if inst.object_id in chosen]
    test = [inst for inst in dataset if inst.object_id not in chosen]
    return train, test
