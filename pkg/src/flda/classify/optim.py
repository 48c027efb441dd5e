"""Batch gradient descent with backtracking (Armijo) line search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from .model import TrainConfig


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    iterations: int
    grad_norm: float
    converged: bool


def gradient_descent(fun, x0, config: TrainConfig, value_only=None) -> DescentResult:
    """Minimize ``fun`` from ``x0``.

    ``fun(x)`` returns ``(value, gradient)`` with the gradient shaped like
    ``x``; ``value_only(x)``, when given, is used for line-search trials so
    that gradients are only computed at accepted points.  Each iteration
    starts the line search at ``config.step_init`` and shrinks by
    ``config.step_shrink`` until the Armijo condition holds.
    """
    x = np.array(x0, dtype=np.float64)
    value, grad = fun(x)
    if not np.isfinite(value):
        raise ModelError("objective is not finite at the starting point")
    iterations = 0
    grad_norm = float(np.max(np.abs(grad)))
    while grad_norm > config.grad_tol and iterations < config.max_iter:
        sq = float(np.sum(grad * grad))
        step = config.step_init
        while True:
            candidate = x - step * grad
            if value_only is None:
                new_value, new_grad = fun(candidate)
            else:
                new_value, new_grad = value_only(candidate), None
            if np.isfinite(new_value) and new_value <= value - config.sufficient_decrease * step * sq:
                break
            step *= config.step_shrink
            if step < 1e-20:
                if not np.isfinite(new_value):
                    raise ModelError(
                        "objective became non-finite during descent; rescale the features"
                    )
                # no representable decrease left: the iterate is numerically optimal
                return DescentResult(x, value, iterations, grad_norm, False)
        if new_grad is None:
            new_value, new_grad = fun(candidate)
        x, value, grad = candidate, new_value, new_grad
        if not np.all(np.isfinite(grad)):
            raise ModelError("gradient became non-finite during descent; rescale the features")
        iterations += 1
        grad_norm = float(np.max(np.abs(grad)))
    return DescentResult(x, value, iterations, grad_norm, grad_norm <= config.grad_tol)
