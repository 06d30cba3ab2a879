"""Line-oriented JSON file formats for datasets and predictions.

Both formats start with one header object followed by one record per line::

    {"format": "plrank-dataset", "version": 1, "n_classes": 5, "label_names": [...], "input_dim": 8}
    {"object_id": "obj001", "orientation_id": "ori0", "labeller_id": "lab03", "features": [...], "ranking": ["PowerSphere", ...]}

Prediction records carry ``object_id``, ``orientation_id``, ``weights`` and
``ranking`` instead. Rankings are always written as label names. Reals use
Python's shortest round-trip ``repr``, so reading a file back is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import as_ranking
from .synth import LabelledInstance

__all__ = [
    "DATASET_FORMAT",
    "PREDICTIONS_FORMAT",
    "Dataset",
    "Predictions",
    "read_dataset",
    "read_predictions",
    "write_dataset",
    "write_predictions",
]

DATASET_FORMAT = "plrank-dataset"
PREDICTIONS_FORMAT = "plrank-predictions"


class FormatError(ValueError):
    """A file parsed but does not follow the expected layout."""


@dataclass
class Dataset:
    label_names: list[str]
    input_dim: int
    instances: list[LabelledInstance]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)


@dataclass
class PredictionRecord:
    object_id: str
    orientation_id: str
    weights: np.ndarray
    ranking: np.ndarray


@dataclass
class Predictions:
    label_names: list[str]
    records: list[PredictionRecord]


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def _names(ranking, label_names):
    return [label_names[int(i)] for i in ranking]


def _indices(names, lookup, where):
    try:
        idx = [lookup[name] for name in names]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{where}: unknown label {exc}") from None
    try:
        return as_ranking(idx, len(lookup))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def _header(line: str, fmt: str, path) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: header is not valid JSON ({exc})") from None
    if not isinstance(header, dict) or header.get("format") != fmt:
        raise FormatError(f"{path}: expected a {fmt!r} header line")
    names = header.get("label_names")
    if not isinstance(names, list) or not names or len(set(names)) != len(names):
        raise FormatError(f"{path}: header needs a non-empty list of distinct label_names")
    if int(header.get("n_classes", len(names))) != len(names):
        raise FormatError(f"{path}: n_classes does not match label_names")
    return header


def write_dataset(path_or_file, dataset: Dataset) -> None:
    header = {
        "format": DATASET_FORMAT,
        "version": 1,
        "n_classes": dataset.n_classes,
        "label_names": list(dataset.label_names),
        "input_dim": dataset.input_dim,
    }
    lines = [_dumps(header)]
    for inst in dataset.instances:
        lines.append(
            _dumps(
                {
                    "object_id": inst.object_id,
                    "orientation_id": inst.orientation_id,
                    "labeller_id": inst.labeller_id,
                    "features": [float(v) for v in inst.features],
                    "ranking": _names(inst.ranking, dataset.label_names),
                }
            )
        )
    _write_lines(path_or_file, lines)


def _write_lines(path_or_file, lines):
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return [line for line in fh.read().splitlines() if line.strip()]


def sniff_format(path) -> str | None:
    lines = _read_lines(path)
    if not lines:
        return None
    try:
        return json.loads(lines[0]).get("format")
    except (json.JSONDecodeError, AttributeError):
        return None


def read_dataset(path) -> Dataset:
    lines = _read_lines(path)
    if not lines:
        raise FormatError(f"{path}: file is empty")
    header = _header(lines[0], DATASET_FORMAT, path)
    names = list(header["label_names"])
    input_dim = int(header.get("input_dim", 0))
    lookup = {name: i for i, name in enumerate(names)}
    instances = []
    for lineno, line in enumerate(lines[1:], start=2):
        where = f"{path}:{lineno}"
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{where}: invalid JSON ({exc})") from None
        ranking = rec.get("ranking")
        if not isinstance(ranking, list) or len(ranking) != len(names):
            raise FormatError(f"{where}: ranking must list all {len(names)} labels")
        features = np.asarray(rec.get("features", []), dtype=np.float64)
        if features.ndim != 1 or features.size != input_dim:
            raise FormatError(f"{where}: expected {input_dim} features, got {features.size}")
        if not np.all(np.isfinite(features)):
            raise FormatError(f"{where}: features must be finite")
        instances.append(
            LabelledInstance(
                str(rec.get("object_id", "")),
                str(rec.get("orientation_id", "")),
                str(rec.get("labeller_id", "")),
                features,
                _indices(ranking, lookup, where),
            )
        )
    return Dataset(names, input_dim, instances)


def write_predictions(path_or_file, predictions: Predictions) -> None:
    header = {
        "format": PREDICTIONS_FORMAT,
        "version": 1,
        "n_classes": len(predictions.label_names),
        "label_names": list(predictions.label_names),
    }
    lines = [_dumps(header)]
    for rec in predictions.records:
        lines.append(
            _dumps(
                {
                    "object_id": rec.object_id,
                    "orientation_id": rec.orientation_id,
                    "weights": [float(v) for v in rec.weights],
                    "ranking": _names(rec.ranking, predictions.label_names),
                }
            )
        )
    _write_lines(path_or_file, lines)


def read_predictions(path) -> Predictions:
    lines = _read_lines(path)
    if not lines:
        raise FormatError(f"{path}: file is empty")
    header = _header(lines[0], PREDICTIONS_FORMAT, path)
    names = list(header["label_names"])
    lookup = {name: i for i, name in enumerate(names)}
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        where = f"{path}:{lineno}"
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{where}: invalid JSON ({exc})") from None
        ranking = rec.get("ranking")
        if not isinstance(ranking, list) or len(ranking) != len(names):
            raise FormatError(f"{where}: ranking must list all {len(names)} labels")
        weights = rec.get("weights")
        weights = None if weights is None else np.asarray(weights, dtype=np.float64)
        if weights is not None and weights.shape != (len(names),):
            raise FormatError(f"{where}: weights must have {len(names)} entries")
        records.append(
            PredictionRecord(
                str(rec.get("object_id", "")),
                str(rec.get("orientation_id", "")),
                weights,
                _indices(ranking, lookup, where),
            )
        )
    return Predictions(names, records)
