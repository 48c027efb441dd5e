r"""Logistic-loss classifiers: FLDA-L (binary and multiclass) and naive logistic regression.

The expected logistic loss under the transfer model has no closed form.  It
is approximated by expanding the log-partition function ``A`` to second
order around the score of the source sample, ``a_i = w'x_i``:

.. math::

    E[A(w'z)] \approx A(a_i) + A'(a_i)\, w'\Delta_i
        + \tfrac12 A''(a_i)\, w'(V_i + \Delta_i\Delta_i')w

with ``Delta_i = E[z | x_i] - x_i`` and ``V_i`` the (diagonal) transfer
variance.  Under unbiased dropout ``Delta_i = 0`` and only the curvature
term survives.  For binary -1/+1 labels ``A(a) = log(e^a + e^-a)``, so
``A'' = 4 sigma(2a) sigma(-2a)``.  The multiclass version uses the full
softmax Hessian ``diag(p) - pp'``, which makes K = 2 coincide with the
binary objective.

The ``*_taylor_objective`` functions take the general (mean shift, variance)
form; the dropout entry points pass ``shift=None``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, softmax

from ..data import Dataset
from ..errors import DataError
from ..transfer import DropoutTransfer
from .model import LinearModel, TrainConfig, with_bias
from .optim import gradient_descent
from .quadratic import bias_variance_factor


def _curvature(a):
    """``A''(a) = 1 - tanh(a)^2``, evaluated without cancellation."""
    e = np.exp(-2.0 * np.abs(a))
    return 4.0 * e / (1.0 + e) ** 2


def binary_taylor_objective(w, A, y, var, shift=None, need_grad=True):
    """Mean Taylor-approximated expected logistic risk and its gradient.

    Parameters
    ----------
    w : (p,) weights, bias last
    A : (n, p) bias-appended source samples
    y : (n,) labels in {-1, +1}
    var : (n, p) diagonal transfer variances per sample
    shift : (n, p), optional
        ``E[z | x_i] - x_i``; ``None`` for an unbiased transfer.
    """
    n = A.shape[0]
    a = A @ w
    t = np.tanh(a)
    h = _curvature(a)
    q = var @ (w * w)
    value = -y * a + np.logaddexp(a, -a)
    if shift is not None:
        s = shift @ w
        q = q + s * s
        value = value - y * s + t * s
    value = value + 0.5 * h * q
    risk = float(np.sum(value) / n)
    if not need_grad:
        return risk
    # A'''(a) = -2 tanh(a) A''(a)
    coef = -y + t - t * h * q
    grad = A.T @ coef + (var.T @ h) * w
    if shift is not None:
        grad += A.T @ (h * s) + shift.T @ (-y + t + h * s)
    return risk, grad / n


def multiclass_taylor_objective(W, A, Y, var, shift=None, need_grad=True):
    """Multiclass analogue of :func:`binary_taylor_objective`.

    ``W`` is ``(p, K)``, ``Y`` the ``(n, K)`` one-hot labels.  The curvature
    term is ``0.5 * tr(H_i W' C_i W)`` with ``H_i = diag(p_i) - p_i p_i'``
    and ``C_i = V_i + Delta_i Delta_i'``.
    """
    n = A.shape[0]
    S = A @ W
    lse = logsumexp(S, axis=1)
    P = np.exp(S - lse[:, None])
    G = var @ (W * W)
    U = P @ W.T
    varU = var * U
    quad = np.sum(P * G, axis=1) - np.sum(varU * U, axis=1)
    value = -np.sum(Y * S, axis=1) + lse
    if shift is not None:
        D = shift @ W
        pD = np.sum(P * D, axis=1)
        quad = quad + np.sum(P * D * D, axis=1) - pD**2
        value = value - np.sum(Y * D, axis=1) + pD
    value = value + 0.5 * quad
    risk = float(np.sum(value) / n)
    if not need_grad:
        return risk
    # derivative of the curvature term through the class probabilities
    diag_M = G
    Mp = varU @ W
    if shift is not None:
        diag_M = diag_M + D * D
        Mp = Mp + D * pD[:, None]
    g = 0.5 * diag_M - Mp
    Hg = P * g - P * np.sum(P * g, axis=1, keepdims=True)
    resid = P - Y
    grad = A.T @ (resid + Hg) + W * (var.T @ P) - varU.T @ P
    if shift is not None:
        R = P * D - P * pD[:, None]
        grad += A.T @ R + shift.T @ (resid + R)
    return risk, grad / n


def _design(dataset: Dataset, transfer: DropoutTransfer):
    if dataset.labels is None:
        raise DataError("training data has no labels")
    if dataset.n == 0:
        raise DataError("training data is empty")
    if transfer.m != dataset.m:
        raise DataError(f"transfer has {transfer.m} features, data has {dataset.m}")
    A = with_bias(dataset.dense())
    var = (A * A) * bias_variance_factor(transfer)
    return A, var


def _weights(model):
    return model.weights if isinstance(model, LinearModel) else np.asarray(model, dtype=np.float64)


def expected_logistic_risk_taylor(model, source: Dataset, transfer: DropoutTransfer) -> float:
    if not source.is_binary:
        raise DataError("expected binary -1/+1 labels")
    A, var = _design(source, transfer)
    return binary_taylor_objective(
        _weights(model), A, source.labels.astype(np.float64), var, need_grad=False
    )


def grad_logistic_taylor(model, source: Dataset, transfer: DropoutTransfer) -> np.ndarray:
    if not source.is_binary:
        raise DataError("expected binary -1/+1 labels")
    A, var = _design(source, transfer)
    return binary_taylor_objective(_weights(model), A, source.labels.astype(np.float64), var)[1]


def _onehot(source: Dataset, W):
    Y = source.onehot()
    if W is not None and W.shape[1] != Y.shape[1]:
        raise DataError(f"weights have {W.shape[1]} classes, labels have {Y.shape[1]}")
    return Y


def multiclass_risk_taylor(W, source: Dataset, transfer: DropoutTransfer) -> float:
    W = _weights(W)
    A, var = _design(source, transfer)
    return multiclass_taylor_objective(W, A, _onehot(source, W), var, need_grad=False)


def multiclass_grad(W, source: Dataset, transfer: DropoutTransfer) -> np.ndarray:
    W = _weights(W)
    A, var = _design(source, transfer)
    return multiclass_taylor_objective(W, A, _onehot(source, W), var)[1]


def _minimize(dataset, transfer, config, l2, adapted):
    A, var = _design(dataset, transfer)
    p = A.shape[1]
    penalty = np.full(p, l2)
    penalty[-1] = 0.0
    if dataset.is_binary:
        y = dataset.labels.astype(np.float64)
        x0 = np.zeros(p)

        def fun(w):
            risk, grad = binary_taylor_objective(w, A, y, var)
            return risk + penalty @ (w * w), grad + 2.0 * penalty * w

        def value_only(w):
            return binary_taylor_objective(w, A, y, var, need_grad=False) + penalty @ (w * w)

    else:
        Y = _onehot(dataset, None)
        x0 = np.zeros((p, Y.shape[1]))

        def fun(W):
            risk, grad = multiclass_taylor_objective(W, A, Y, var)
            return risk + penalty @ np.sum(W * W, axis=1), grad + 2.0 * penalty[:, None] * W

        def value_only(W):
            risk = multiclass_taylor_objective(W, A, Y, var, need_grad=False)
            return risk + penalty @ np.sum(W * W, axis=1)

    result = gradient_descent(fun, x0, config, value_only)
    meta = {
        "n_train": dataset.n,
        "iterations": result.iterations,
        "grad_norm": result.grad_norm,
        "converged": int(result.converged),
        "l2": l2,
    }
    return LinearModel(result.x, "logistic", adapted=adapted, train_meta=meta)


def fit_flda_l(source: Dataset, transfer: DropoutTransfer, config: TrainConfig = TrainConfig()):
    """FLDA with logistic loss: gradient descent on the Taylor-approximated risk.

    Binary labels give a weight vector, multiclass labels a weight matrix.
    ``config.l2`` is ignored; the transfer variance is the regularizer.
    """
    return _minimize(source, transfer, config, 0.0, adapted=True)


def fit_lr(dataset: Dataset, config: TrainConfig = TrainConfig()) -> LinearModel:
    """Naive logistic regression, ``mean loss + l2 * ||w||^2`` (bias unpenalized).

    Multiclass labels use the softmax (multinomial) loss.
    """
    return _minimize(dataset, DropoutTransfer.none(dataset.m), config, config.l2, adapted=False)


def class_probabilities(model: LinearModel, dataset) -> np.ndarray:
    """Predicted class probabilities of a logistic model, columns in class-id order."""
    scores = model.decision_function(dataset)
    if model.multiclass:
        return softmax(scores, axis=1)
    p = 1.0 / (1.0 + np.exp(-2.0 * scores))
    return np.column_stack([1.0 - p, p])
