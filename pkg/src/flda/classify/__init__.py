"""Linear classifiers trained under a transfer model, plus naive baselines."""

from .logistic import (
    binary_taylor_objective,
    class_probabilities,
    expected_logistic_risk_taylor,
    fit_flda_l,
    fit_lr,
    grad_logistic_taylor,
    multiclass_grad,
    multiclass_risk_taylor,
    multiclass_taylor_objective,
)
from .model import (
    LinearModel,
    TrainConfig,
    error_rate,
    load_model,
    predict,
    save_model,
    score,
    with_bias,
)
from .quadratic import (
    expected_quadratic_gradient,
    expected_quadratic_risk,
    fit_flda_q,
    fit_ls,
    multiclass_fit_flda_q,
    solve_normal_equations,
)

__all__ = [
    "LinearModel",
    "TrainConfig",
    "binary_taylor_objective",
    "class_probabilities",
    "error_rate",
    "expected_logistic_risk_taylor",
    "expected_quadratic_gradient",
    "expected_quadratic_risk",
    "fit_flda_l",
    "fit_flda_q",
    "fit_lr",
    "fit_ls",
    "grad_logistic_taylor",
    "load_model",
    "multiclass_fit_flda_q",
    "multiclass_grad",
    "multiclass_risk_taylor",
    "multiclass_taylor_objective",
    "predict",
    "save_model",
    "score",
    "solve_normal_equations",
    "with_bias",
]
