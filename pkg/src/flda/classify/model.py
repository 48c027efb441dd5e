"""Linear models, prediction and the plain-text model format."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import Dataset
from ..errors import DataError, ParseError

LOSS_KINDS = ("quadratic", "logistic")


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and regularization settings.

    ``l2`` applies to the naive baselines only; the bias is never penalized.
    Gradient descent stops once the infinity norm of the gradient drops
    below ``grad_tol`` or after ``max_iter`` iterations.
    """

    l2: float = 0.0
    max_iter: int = 5000
    grad_tol: float = 1e-5
    step_init: float = 1.0
    step_shrink: float = 0.5
    sufficient_decrease: float = 1e-4

    def __post_init__(self):
        if self.l2 < 0:
            raise DataError("l2 must be >= 0")
        if self.max_iter < 1 or self.grad_tol <= 0 or self.step_init <= 0:
            raise DataError("max_iter, grad_tol and step_init must be positive")
        if not 0 < self.step_shrink < 1 or not 0 < self.sufficient_decrease < 1:
            raise DataError("step_shrink and sufficient_decrease must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Weights of a linear classifier; the last row is the bias.

    Binary models hold an ``(m+1,)`` vector, multiclass models an
    ``(m+1, K)`` matrix.
    """

    weights: np.ndarray
    loss_kind: str
    adapted: bool = False
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim not in (1, 2) or w.shape[0] < 1:
            raise DataError(f"bad weight shape {w.shape}")
        if w.ndim == 2 and w.shape[1] < 2:
            raise DataError("multiclass weights need K >= 2 columns")
        if not np.all(np.isfinite(w)):
            raise DataError("weights must be finite")
        if self.loss_kind not in LOSS_KINDS:
            raise DataError(f"loss_kind must be one of {LOSS_KINDS}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.shape[0] - 1

    @property
    def multiclass(self) -> bool:
        return self.weights.ndim == 2

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1] if self.multiclass else 2

    def decision_function(self, features) -> np.ndarray:
        X = features.dense() if isinstance(features, Dataset) else np.asarray(features)
        if X.shape[1] != self.m:
            raise DataError(f"model expects {self.m} features, data has {X.shape[1]}")
        return X @ self.weights[:-1] + self.weights[-1]


def with_bias(X: np.ndarray) -> np.ndarray:
    """Append a constant-one column."""
    return np.hstack([X, np.ones((X.shape[0], 1))])


def predict(model: LinearModel, dataset) -> np.ndarray:
    """Binary: sign of the score with sign(0) = +1.  Multiclass: argmax,
    ties going to the lowest class id."""
    scores = model.decision_function(dataset)
    if model.multiclass:
        return np.argmax(scores, axis=1)
    return np.where(scores >= 0, 1, -1)


def error_rate(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DataError(f"shape mismatch {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise DataError("cannot score an empty prediction")
    return float(np.mean(predicted != truth))


def score(model: LinearModel, dataset: Dataset) -> float:
    if dataset.labels is None:
        raise DataError("dataset has no labels to score against")
    return error_rate(predict(model, dataset), dataset.labels)


def save_model(model: LinearModel, path):
    """Header of ``# key: value`` lines followed by one weight row per line.

    Weights are written with ``repr`` so :func:`load_model` restores them
    bit for bit.
    """
    w = model.weights
    lines = [
        "# flda-model 1",
        f"# loss_kind: {model.loss_kind}",
        f"# adapted: {int(model.adapted)}",
        f"# rows: {w.shape[0]}",
        f"# cols: {1 if w.ndim == 1 else w.shape[1]}",
    ]
    for key in sorted(model.train_meta):
        lines.append(f"# meta.{key}: {model.train_meta[key]!r}")
    for row in w[:, None] if w.ndim == 1 else w:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _meta_value(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text.strip("'\"")


def load_model(path) -> LinearModel:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# flda-model"):
        raise ParseError("not a model file", path, 1)
    header, meta, rows = {}, {}, []
    for line_no, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            if key.startswith("meta."):
                meta[key[5:]] = _meta_value(value)
            else:
                header[key] = value
        elif line.strip():
            try:
                rows.append([float(v) for v in line.split()])
            except ValueError:
                raise ParseError("bad weight row", path, line_no) from None
    try:
        n_rows, n_cols = int(header["rows"]), int(header["cols"])
        loss_kind, adapted = header["loss_kind"], bool(int(header["adapted"]))
    except (KeyError, ValueError):
        raise ParseError("incomplete model header", path) from None
    if len(rows) != n_rows or any(len(r) != n_cols for r in rows):
        raise ParseError(f"expected {n_rows}x{n_cols} weights", path)
    w = np.array(rows)
    if n_cols == 1:
        w = w[:, 0]
    return LinearModel(w, loss_kind, adapted, meta)
