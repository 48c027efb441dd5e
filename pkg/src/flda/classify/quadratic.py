"""Least-squares classifiers: FLDA-Q and the naive ridge baseline."""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..errors import DataError, ModelError
from ..transfer import DropoutTransfer
from .model import LinearModel, TrainConfig, with_bias


def _weights(model):
    return model.weights if isinstance(model, LinearModel) else np.asarray(model, dtype=np.float64)


def _check_binary(dataset: Dataset):
    if dataset.labels is None:
        raise DataError("training data has no labels")
    if not dataset.is_binary:
        raise DataError("expected binary -1/+1 labels")
    if dataset.n == 0:
        raise DataError("training data is empty")


def _check_transfer(dataset: Dataset, transfer: DropoutTransfer):
    if transfer.m != dataset.m:
        raise DataError(f"transfer has {transfer.m} features, data has {dataset.m}")


def bias_variance_factor(transfer: DropoutTransfer) -> np.ndarray:
    """Variance factors extended with a 0 for the (never dropped) bias."""
    return np.append(transfer.variance_factor, 0.0)


def solve_normal_equations(M, b, what="normal equations", hint=""):
    """Solve ``M w = b``; on failure retry once with a small diagonal jitter."""
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
        raise ModelError(f"non-finite {what}; rescale the features{hint}")
    try:
        w = np.linalg.solve(M, b)
        if np.all(np.isfinite(w)):
            return w
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-9 * float(np.mean(np.diag(M)))
    try:
        w = np.linalg.solve(M + jitter * np.eye(M.shape[0]), b)
        if np.all(np.isfinite(w)):
            return w
    except np.linalg.LinAlgError:
        pass
    cond = np.linalg.cond(M)
    raise ModelError(f"singular {what} (condition number {cond:.3g}){hint}")


def expected_quadratic_risk(model, source: Dataset, transfer: DropoutTransfer) -> float:
    """Summed squared error of ``y - w'z`` in expectation over the dropout transfer.

    With bias-appended means ``A`` this equals
    ``y'y - 2 w'A'y + w'(A'A + V)w`` where ``V`` is the diagonal of summed
    transfer variances.
    """
    _check_binary(source)
    _check_transfer(source, transfer)
    w = _weights(model)
    A = with_bias(source.dense())
    y = source.labels.astype(np.float64)
    residual = y - A @ w
    variance = bias_variance_factor(transfer) * np.sum(A * A, axis=0)
    return float(residual @ residual + variance @ (w * w))


def expected_quadratic_gradient(model, source: Dataset, transfer: DropoutTransfer):
    _check_binary(source)
    _check_transfer(source, transfer)
    w = _weights(model)
    A = with_bias(source.dense())
    y = source.labels.astype(np.float64)
    variance = bias_variance_factor(transfer) * np.sum(A * A, axis=0)
    return 2.0 * (A.T @ (A @ w - y) + variance * w)


def _gram(dataset: Dataset):
    A = with_bias(dataset.dense())
    return A, A.T @ A


def _flda_system(A, G, transfer):
    # dropout variance keeps only the diagonal of A'A, scaled per feature
    return G + np.diag(bias_variance_factor(transfer) * np.diag(G))


def fit_flda_q(source: Dataset, transfer: DropoutTransfer) -> LinearModel:
    """Closed-form FLDA with quadratic loss on a binary problem."""
    _check_binary(source)
    _check_transfer(source, transfer)
    A, G = _gram(source)
    y = source.labels.astype(np.float64)
    w = solve_normal_equations(_flda_system(A, G, transfer), A.T @ y, "FLDA-Q system")
    return LinearModel(w, "quadratic", adapted=True, train_meta={"n_train": source.n})


def _one_vs_all_targets(dataset: Dataset) -> np.ndarray:
    Y = dataset.onehot()
    missing = np.flatnonzero(Y.sum(axis=0) == 0)
    if missing.size:
        raise DataError(f"classes {missing.tolist()} absent from the training data")
    return 2.0 * Y - 1.0


def multiclass_fit_flda_q(source: Dataset, transfer: DropoutTransfer) -> LinearModel:
    """One-vs-all FLDA-Q: one column of weights per class, predict by argmax."""
    if source.labels is None:
        raise DataError("training data has no labels")
    _check_transfer(source, transfer)
    T = _one_vs_all_targets(source)
    A, G = _gram(source)
    W = solve_normal_equations(_flda_system(A, G, transfer), A.T @ T, "FLDA-Q system")
    return LinearModel(W, "quadratic", adapted=True, train_meta={"n_train": source.n})


def fit_ls(dataset: Dataset, config: TrainConfig = TrainConfig()) -> LinearModel:
    """Naive (ridge) least-squares classifier.

    Minimizes ``mean((y - w'x)^2) + l2 * ||w||^2`` with the bias excluded from
    the penalty.  Multiclass labels are handled one-vs-all.
    """
    if dataset.labels is None:
        raise DataError("training data has no labels")
    if dataset.n == 0:
        raise DataError("training data is empty")
    A, G = _gram(dataset)
    penalty = np.full(A.shape[1], dataset.n * config.l2)
    penalty[-1] = 0.0
    T = dataset.labels.astype(np.float64) if dataset.is_binary else _one_vs_all_targets(dataset)
    hint = "; use l2 > 0" if config.l2 == 0 else ""
    w = solve_normal_equations(G + np.diag(penalty), A.T @ T, "least-squares normal equations", hint)
    return LinearModel(
        w, "quadratic", adapted=False, train_meta={"n_train": dataset.n, "l2": config.l2}
    )
