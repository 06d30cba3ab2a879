"""Feature-conditioned Plackett-Luce predictors trained on ranking labels.

A model maps a feature vector to class logits and then through softmax to a
distribution over classes. Training minimizes the negative Plackett-Luce
log-likelihood of each instance's ranking label, plus an L2 penalty on the
weight matrices, by plain mini-batch SGD.

Parameter layout (flat float64 vector, row-major, layer by layer, weights
before biases):

* ``linear``: ``W (n_classes, input_dim)``, ``b (n_classes,)``
* ``mlp1``: ``W1 (hidden_dim, input_dim)``, ``b1 (hidden_dim,)``,
  ``W2 (n_classes, hidden_dim)``, ``b2 (n_classes,)``
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .core import as_ranking, as_rankings, rank_from_weights, softmax

__all__ = [
    "DEFAULT_LABELS",
    "RankerModel",
    "TrainConfig",
    "TrainHistory",
    "TrainingDivergedError",
    "forward",
    "gradient_check",
    "init_model",
    "load_model",
    "loss_and_gradient",
    "predict_distribution",
    "predict_ranking",
    "save_model",
    "train",
]

DEFAULT_LABELS = ("OpenPalm", "MediumWrap", "PowerSphere", "ParallelExtension", "PalmarPinch")

LEARNING_RATE_GRID = (1e-5, 1e-4, 1e-3)
L2_GRID = (0.0002, 0.002, 0.02)

MODEL_FORMAT = "plrank-model"


class TrainingDivergedError(FloatingPointError):
    """Raised when the training loss or parameters stop being finite."""


def default_labels(n_classes: int) -> list[str]:
    if n_classes == len(DEFAULT_LABELS):
        return list(DEFAULT_LABELS)
    return [f"class{i}" for i in range(n_classes)]


def _layer_shapes(architecture, input_dim, hidden_dim, n_classes):
    if architecture == "linear":
        return [((n_classes, input_dim), (n_classes,))]
    if architecture == "mlp1":
        return [((hidden_dim, input_dim), (hidden_dim,)), ((n_classes, hidden_dim), (n_classes,))]
    raise ValueError(f"architecture must be 'linear' or 'mlp1', got {architecture!r}")


@dataclass
class RankerModel:
    architecture: str
    input_dim: int
    n_classes: int
    parameters: np.ndarray
    hidden_dim: int = 0
    label_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.parameters = np.ascontiguousarray(self.parameters, dtype=np.float64)
        if not self.label_names:
            self.label_names = default_labels(self.n_classes)
        if len(self.label_names) != self.n_classes:
            raise ValueError("label_names must have one entry per class")
        expected = self.n_parameters(self.architecture, self.input_dim, self.hidden_dim, self.n_classes)
        if self.parameters.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got shape {self.parameters.shape}")
        if not np.all(np.isfinite(self.parameters)):
            raise ValueError("model parameters must be finite")

    @staticmethod
    def n_parameters(architecture, input_dim, hidden_dim, n_classes) -> int:
        return sum(int(np.prod(ws)) + bs[0] for ws, bs in _layer_shapes(architecture, input_dim, hidden_dim, n_classes))

    def layers(self, params: np.ndarray | None = None):
        """``[(W, b), ...]`` as views into ``params`` (default: this model's)."""
        params = self.parameters if params is None else params
        out, offset = [], 0
        for ws, bs in _layer_shapes(self.architecture, self.input_dim, self.hidden_dim, self.n_classes):
            size = ws[0] * ws[1]
            W = params[offset : offset + size].reshape(ws)
            offset += size
            b = params[offset : offset + bs[0]]
            offset += bs[0]
            out.append((W, b))
        return out

    def weight_mask(self) -> np.ndarray:
        """Boolean mask over ``parameters`` selecting weight-matrix entries (not biases)."""
        mask = np.zeros(self.parameters.size, dtype=bool)
        offset = 0
        for ws, bs in _layer_shapes(self.architecture, self.input_dim, self.hidden_dim, self.n_classes):
            mask[offset : offset + ws[0] * ws[1]] = True
            offset += ws[0] * ws[1] + bs[0]
        return mask

    def copy(self) -> RankerModel:
        return RankerModel(
            self.architecture, self.input_dim, self.n_classes, self.parameters.copy(), self.hidden_dim, list(self.label_names)
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    l2_lambda: float = 0.002
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    init_scale: float = 0.01

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be a finite value > 0")
        if not self.l2_lambda >= 0:
            raise ValueError("l2_lambda must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.init_scale >= 0:
            raise ValueError("init_scale must be >= 0")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] | None = None


def init_model(
    architecture: str,
    input_dim: int,
    n_classes: int,
    hidden_dim: int = 16,
    seed: int = 0,
    init_scale: float = 0.01,
    label_names=None,
) -> RankerModel:
    """Parameters drawn i.i.d. uniform in ``[-init_scale, init_scale]``."""
    if input_dim < 1 or n_classes < 1:
        raise ValueError("input_dim and n_classes must be >= 1")
    if architecture == "mlp1" and hidden_dim < 1:
        raise ValueError("hidden_dim must be >= 1 for mlp1")
    if init_scale < 0:
        raise ValueError("init_scale must be >= 0")
    if architecture == "linear":
        hidden_dim = 0
    size = RankerModel.n_parameters(architecture, input_dim, hidden_dim, n_classes)
    rng = np.random.default_rng(seed)
    params = rng.uniform(-init_scale, init_scale, size) if init_scale > 0 else np.zeros(size)
    return RankerModel(architecture, input_dim, n_classes, params, hidden_dim, list(label_names or []))


def _as_features(model: RankerModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ValueError(f"features must have length {model.input_dim}, got shape {np.shape(features)}")
    return X


def _logits(model: RankerModel, X: np.ndarray, params=None):
    layers = model.layers(params)
    if model.architecture == "linear":
        (W, b), = layers
        return X @ W.T + b, None
    (W1, b1), (W2, b2) = layers
    pre = X @ W1.T + b1
    hidden = np.maximum(pre, 0.0)
    return hidden @ W2.T + b2, (pre, hidden)


def logits(model: RankerModel, features) -> np.ndarray:
    X = _as_features(model, features)
    out, _ = _logits(model, X)
    return out[0] if np.ndim(features) == 1 else out


def forward(model: RankerModel, features) -> np.ndarray:
    """Predicted class distribution for one feature vector (or a 2-d batch)."""
    X = _as_features(model, features)
    out, _ = _logits(model, X)
    w = softmax(out)
    return w[0] if np.ndim(features) == 1 else w


predict_distribution = forward


def predict_ranking(model: RankerModel, features) -> np.ndarray:
    """Classes ordered by predicted probability (ties to the lower index)."""
    w = forward(model, features)
    if w.ndim == 1:
        return rank_from_weights(w)
    return np.argsort(-w, axis=1, kind="stable").astype(np.int64)


def loss_and_gradient(model: RankerModel, X: np.ndarray, R: np.ndarray, l2_lambda: float = 0.0, params=None):
    """Mean PL loss over the batch plus ``l2_lambda * ||weights||^2``, and its gradient.

    Returns:
        (data_loss, total_loss, grad) where ``data_loss`` excludes the L2 term.
    """
    params = model.parameters if params is None else params
    B = X.shape[0]
    out, cache = _logits(model, X, params)
    losses, dlogits = kernels.pl_scores_loss_grad(np.ascontiguousarray(out), R)
    dlogits /= B
    grad = np.empty_like(params)
    gl = model.layers(grad)
    if model.architecture == "linear":
        (gW, gb), = gl
        gW[...] = dlogits.T @ X
        gb[...] = dlogits.sum(axis=0)
    else:
        pre, hidden = cache
        (_, _), (W2, _) = model.layers(params)
        (gW1, gb1), (gW2, gb2) = gl
        gW2[...] = dlogits.T @ hidden
        gb2[...] = dlogits.sum(axis=0)
        dpre = (dlogits @ W2) * (pre > 0.0)
        gW1[...] = dpre.T @ X
        gb1[...] = dpre.sum(axis=0)
    data_loss = float(losses.mean())
    total = data_loss
    if l2_lambda:
        mask = model.weight_mask()
        wpart = params[mask]
        total += l2_lambda * float(wpart @ wpart)
        grad[mask] += 2.0 * l2_lambda * wpart
    return data_loss, total, grad


def dataset_arrays(dataset, n_classes: int | None = None):
    """Stack instances (objects with ``features`` and ``ranking``) into ``(X, R)``."""
    dataset = list(dataset)
    if not dataset:
        raise ValueError("dataset is empty")
    X = np.asarray([inst.features for inst in dataset], dtype=np.float64)
    n = n_classes if n_classes is not None else len(dataset[0].ranking)
    R = as_rankings([inst.ranking for inst in dataset], n)
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    return X, R


def train(model: RankerModel, dataset, config: TrainConfig | None = None, validation=None):
    """Mini-batch SGD on the PL loss; returns a new model and its history.

    ``dataset`` is a sequence of instances exposing ``features`` and
    ``ranking``. Each epoch visits the data in a fresh permutation drawn from
    ``numpy.random.default_rng(config.seed)``. The recorded loss is the mean
    per-instance PL loss over the whole training set after the epoch, without
    the L2 term. ``validation`` (optional, same shape as ``dataset``) adds a
    pair-mode average-overlap accuracy per epoch.
    """
    from .metrics import average_overlap_many

    config = config or TrainConfig()
    X, R = dataset_arrays(dataset, model.n_classes)
    if X.shape[1] != model.input_dim:
        raise ValueError(f"features have dimension {X.shape[1]}, model expects {model.input_dim}")
    if validation is not None:
        Xv, Rv = dataset_arrays(validation, model.n_classes)
        if Xv.shape[1] != model.input_dim:
            raise ValueError("validation features have the wrong dimension")

    model = model.copy()
    params = model.parameters
    rng = np.random.default_rng(config.seed)
    history = TrainHistory(val_accuracy=[] if validation is not None else None)
    N = X.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(N)
        for start in range(0, N, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, total, grad = loss_and_gradient(model, X[idx], R[idx], config.l2_lambda)
            if not math.isfinite(total):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch + 1}, batch starting {start}")
            params -= config.learning_rate * grad
        if not np.all(np.isfinite(params)):
            raise TrainingDivergedError(f"non-finite parameters after epoch {epoch + 1}")
        out, _ = _logits(model, X)
        losses, _ = kernels.pl_scores_loss_grad(np.ascontiguousarray(out), R)
        epoch_loss = math.fsum(losses) / N
        if not math.isfinite(epoch_loss):
            raise TrainingDivergedError(f"non-finite training loss after epoch {epoch + 1}")
        history.loss.append(epoch_loss)
        if validation is not None:
            pred = predict_ranking(model, Xv)
            history.val_accuracy.append(math.fsum(average_overlap_many(pred, Rv)) / len(Rv))
    return model, history


def gradient_check(model: RankerModel, instance, step: float = 1e-6, l2_lambda: float = 0.0, floor: float = 1e-3) -> float:
    """Largest discrepancy between backprop and central finite differences.

    Every parameter is perturbed by ``+-step`` and the full loss (L2 included)
    re-evaluated. Per-parameter error is ``|a - f| / max(|a|, |f|, floor)``,
    i.e. relative error with a floor so that components that are zero up to
    rounding do not dominate.
    """
    if not 1e-8 <= step <= 1e-4:
        raise ValueError("step must lie in [1e-8, 1e-4]")
    X = _as_features(model, instance.features)
    R = as_ranking(instance.ranking, model.n_classes)[None, :]
    _, _, analytic = loss_and_gradient(model, X, R, l2_lambda)
    params = model.parameters.copy()
    numeric = np.empty_like(params)
    for i in range(params.size):
        orig = params[i]
        params[i] = orig + step
        _, fp, _ = loss_and_gradient(model, X, R, l2_lambda, params)
        params[i] = orig - step
        _, fm, _ = loss_and_gradient(model, X, R, l2_lambda, params)
        params[i] = orig
        numeric[i] = (fp - fm) / (2.0 * step)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_text(model: RankerModel) -> str:
    """JSON text with every parameter written to 17 significant digits."""
    header = {
        "format": MODEL_FORMAT,
        "version": 1,
        "architecture": model.architecture,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "n_classes": model.n_classes,
        "label_names": list(model.label_names),
        "layout": "row-major, layer by layer, weights before biases",
    }
    body = json.dumps(header, indent=1)[:-2]
    params = ",\n  ".join(_fmt(p) for p in model.parameters)
    return f'{body},\n "parameters": [\n  {params}\n ]\n}}\n'


def model_from_text(text: str) -> RankerModel:
    data = json.loads(text)
    if data.get("format") != MODEL_FORMAT:
        raise ValueError("not a plrank model file")
    return RankerModel(
        architecture=data["architecture"],
        input_dim=int(data["input_dim"]),
        n_classes=int(data["n_classes"]),
        parameters=np.asarray(data["parameters"], dtype=np.float64),
        hidden_dim=int(data.get("hidden_dim", 0)),
        label_names=list(data["label_names"]),
    )


def save_model(model: RankerModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> RankerModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_text(fh.read())
