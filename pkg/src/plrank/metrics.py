"""Ranked-list and distribution evaluation.

The main score is the average overlap between two rankings: for every depth
``i`` take the fraction of items the two top-``i`` prefixes share, then average
over depths. Agreement near the top counts at every deeper depth too, so the
score is top-weighted. Kendall's tau is provided for comparison.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._backend import kernels
from .core import as_ranking

__all__ = [
    "EvaluationReport",
    "average_overlap",
    "average_overlap_many",
    "distribution_entropy",
    "evaluate",
    "expected_random_overlap",
    "kendall_tau",
]


def _pair(a, b):
    a = as_ranking(a)
    b = as_ranking(b)
    if a.size != b.size:
        raise ValueError(f"rankings have different lengths ({a.size} vs {b.size})")
    return a, b


def average_overlap(predicted, reference) -> float:
    """Mean over depths of the shared fraction of the two top-``i`` prefixes.

    >>> average_overlap([0, 1, 2], [0, 2, 1])  # doctest: +ELLIPSIS
    0.8333...
    """
    a, b = _pair(predicted, reference)
    return float(kernels.average_overlap_batch(a[None, :], b[None, :])[0])


def average_overlap_many(predicted: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Row-wise :func:`average_overlap` over two equal-shape ``(N, n)`` arrays."""
    a = np.ascontiguousarray(predicted, dtype=np.int64)
    b = np.ascontiguousarray(reference, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError("predicted and reference must be equal-shape 2-d arrays")
    return kernels.average_overlap_batch(a, b)


def kendall_tau(a, b) -> float:
    """(concordant - discordant) / C(n, 2) over all item pairs."""
    a, b = _pair(a, b)
    n = a.size
    if n < 2:
        raise ValueError("kendall_tau needs at least 2 items")
    pos_a = np.empty(n, dtype=np.int64)
    pos_b = np.empty(n, dtype=np.int64)
    pos_a[a] = np.arange(n)
    pos_b[b] = np.arange(n)
    i, j = np.triu_indices(n, k=1)
    agree = np.sign(pos_a[i] - pos_a[j]) * np.sign(pos_b[i] - pos_b[j])
    return float(agree.sum()) / (n * (n - 1) / 2)


def distribution_entropy(weights) -> float:
    """Shannon entropy in nats, with ``0 * ln 0 = 0``.

    Unlike the rest of the package this accepts zero weights, since entropy
    is a diagnostic that is well defined on the closed simplex.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a non-empty vector of non-negative reals")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    nz = w[w > 0]
    return max(0.0, float(-np.sum(nz * np.log(nz))))


def expected_random_overlap(n: int) -> float:
    """Exact mean average overlap between a fixed ranking and a uniform random one.

    Found by enumerating all ``n!`` permutations, so ``n`` is capped at 8.
    """
    if not 1 <= n <= 8:
        raise ValueError("expected_random_overlap supports 1 <= n <= 8")
    fixed = tuple(range(n))
    # integer overlap totals per depth, summed over every permutation
    totals = [0] * n
    for perm in itertools.permutations(fixed):
        seen_f: set[int] = set()
        seen_p: set[int] = set()
        for i in range(n):
            seen_f.add(fixed[i])
            seen_p.add(perm[i])
            totals[i] += len(seen_f & seen_p)
    exact = sum(Fraction(t, i + 1) for i, t in enumerate(totals)) / (n * math.factorial(n))
    return float(exact)


@dataclass
class EvaluationReport:
    mean_overlap_accuracy: float
    # one entry per scored unit: (instance, reference) pairs in pair mode, instances otherwise
    accuracies: list[float] = field(default_factory=list)
    mode: str = "pair"
    n_instances: int = 0
    n_pairs: int = 0
    mean_kendall_tau: float | None = None
    mean_entropy: float | None = None

    def as_dict(self) -> dict:
        return {
            "mean_overlap_accuracy": self.mean_overlap_accuracy,
            "n_instances": self.n_instances,
            "n_pairs": self.n_pairs,
            "mean_kendall_tau": self.mean_kendall_tau,
            "mean_entropy": self.mean_entropy,
        }

    def to_text(self) -> str:
        """Fixed-order ``key: value`` lines; floats use round-trip ``repr``."""
        lines = [f"mode: {self.mode}"]
        for key, value in self.as_dict().items():
            lines.append(f"{key}: {'null' if value is None else repr(value)}")
        return "\n".join(lines) + "\n"


def evaluate(
    predictions: Mapping,
    references: Mapping[object, Sequence],
    mode: str = "pair",
    distributions: Mapping | None = None,
) -> EvaluationReport:
    """Score predicted rankings against every reference ranking of each instance.

    In ``"pair"`` mode each (instance, reference) pair counts once; in
    ``"instance"`` mode the references of an instance are averaged first and
    each instance counts once. ``distributions`` optionally maps instances to
    predicted weights for the entropy summary.
    """
    if mode not in ("pair", "instance"):
        raise ValueError(f"mode must be 'pair' or 'instance', got {mode!r}")
    keys = list(predictions)
    pred_rows, ref_rows, owner = [], [], []
    for idx, key in enumerate(keys):
        refs = references.get(key, ())
        if len(refs) == 0:
            raise ValueError(f"instance {key!r} has no reference rankings")
        pred = as_ranking(predictions[key])
        for ref in refs:
            ref = as_ranking(ref)
            if ref.size != pred.size:
                raise ValueError(f"instance {key!r}: reference length {ref.size} != {pred.size}")
            pred_rows.append(pred)
            ref_rows.append(ref)
            owner.append(idx)

    if not keys:
        return EvaluationReport(float("nan"), [], mode)

    sizes = {p.size for p in pred_rows}
    if len(sizes) != 1:
        raise ValueError("all rankings must share one number of classes")
    n = sizes.pop()
    pa, ra = np.stack(pred_rows), np.stack(ref_rows)
    pair_acc = kernels.average_overlap_batch(pa, ra)
    owner_arr = np.asarray(owner)
    taus = None
    if n >= 2:
        taus = np.array([kendall_tau(p, r) for p, r in zip(pred_rows, ref_rows)])

    if mode == "pair":
        accs = pair_acc.tolist()
        tau_units = taus.tolist() if taus is not None else None
    else:
        accs = [math.fsum(pair_acc[owner_arr == i]) / np.count_nonzero(owner_arr == i) for i in range(len(keys))]
        tau_units = (
            [math.fsum(taus[owner_arr == i]) / np.count_nonzero(owner_arr == i) for i in range(len(keys))]
            if taus is not None
            else None
        )

    mean_entropy = None
    if distributions is not None:
        ents = [distribution_entropy(distributions[k]) for k in keys]
        mean_entropy = math.fsum(ents) / len(ents)

    return EvaluationReport(
        mean_overlap_accuracy=math.fsum(accs) / len(accs),
        accuracies=accs,
        mode=mode,
        n_instances=len(keys),
        n_pairs=len(pred_rows),
        mean_kendall_tau=math.fsum(tau_units) / len(tau_units) if tau_units is not None else None,
        mean_entropy=mean_entropy,
    )
