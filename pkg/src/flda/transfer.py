"""Dropout transfer between a source and a target domain.

The source is modelled as independent Bernoulli variables for "feature is
non-zero" (success probabilities ``eta``).  The transfer model drops a
source value to zero with probability ``theta_d`` and rescales survivors by
``1 / (1 - theta_d)`` so that every transferred sample is centred on the
source sample it came from.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, nonzero_frequencies
from .errors import DataError, ModelError, ParseError

DEFAULT_EPSILON = 1e-6

__all__ = [
    "SourceModel",
    "DropoutTransfer",
    "TransferMoments",
    "estimate_source_model",
    "estimate_dropout",
    "fit_transfer",
    "target_marginal_loglik",
    "marginal_nonzero_probability",
    "transfer_moments",
    "sample_transfer",
    "save_transfer_table",
    "load_transfer_table",
]


@dataclass(frozen=True)
class SourceModel:
    eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=np.float64)
        if eta.ndim != 1:
            raise DataError("eta must be a vector")
        if np.any(~np.isfinite(eta)) or np.any(eta < 0) or np.any(eta > 1):
            raise DataError("eta must lie in [0, 1]")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def m(self) -> int:
        return self.eta.shape[0]


@dataclass(frozen=True)
class DropoutTransfer:
    """Per-feature dropout rates, each in ``[0, 1 - epsilon]``."""

    theta: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise DataError("theta must be a vector")
        if not 0 < self.epsilon < 1:
            raise DataError("epsilon must lie in (0, 1)")
        if np.any(~np.isfinite(theta)) or np.any(theta < 0) or np.any(theta > 1 - self.epsilon):
            raise DataError(f"theta must lie in [0, 1 - {self.epsilon}]")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return self.theta.shape[0]

    @property
    def variance_factor(self) -> np.ndarray:
        """``theta / (1 - theta)``, the per-feature variance multiplier."""
        return self.theta / (1.0 - self.theta)

    @classmethod
    def none(cls, m: int) -> "DropoutTransfer":
        """The identity transfer (no dropout) on ``m`` features."""
        return cls(np.zeros(m))

    def perturbed(self, feature: int, delta: float) -> "DropoutTransfer":
        """Copy with ``delta`` added to one rate (used for sensitivity studies)."""
        theta = self.theta.copy()
        theta[feature] += delta
        if theta[feature] > 1 - self.epsilon or theta[feature] < 0:
            raise DataError(
                f"perturbed theta[{feature}] = {theta[feature]} leaves [0, 1 - epsilon]"
            )
        return DropoutTransfer(theta, self.epsilon)


@dataclass(frozen=True)
class TransferMoments:
    mean: np.ndarray
    var_diag: np.ndarray


def estimate_source_model(source: Dataset) -> SourceModel:
    if source.n == 0:
        raise DataError("source dataset is empty")
    return SourceModel(nonzero_frequencies(source).freq)


def estimate_dropout(
    source_model: SourceModel, target: Dataset, epsilon: float = DEFAULT_EPSILON
) -> DropoutTransfer:
    """Maximum-likelihood dropout rates ``max(0, 1 - zeta_d / eta_d)``.

    ``zeta`` is the target non-zero frequency.  Features never seen in the
    source get rate 0; the result is clamped to ``1 - epsilon`` so that the
    variance factor stays finite.
    """
    if target.n == 0:
        raise DataError("target dataset is empty")
    if target.m != source_model.m:
        raise DataError(
            f"target has {target.m} features, source model has {source_model.m}"
        )
    eta = source_model.eta
    zeta = nonzero_frequencies(target).freq
    theta = np.zeros_like(eta)
    seen = eta > 0
    theta[seen] = np.maximum(0.0, 1.0 - zeta[seen] / eta[seen])
    return DropoutTransfer(np.minimum(theta, 1.0 - epsilon), epsilon)


def fit_transfer(source: Dataset, target: Dataset, epsilon: float = DEFAULT_EPSILON):
    """Estimate the source model and the dropout transfer in one go."""
    source_model = estimate_source_model(source)
    return source_model, estimate_dropout(source_model, target, epsilon)


def marginal_nonzero_probability(transfer: DropoutTransfer, source_model: SourceModel):
    """Per-feature probability that a target value is non-zero, ``(1 - theta) * eta``.

    The probability of a zero is its exact complement.
    """
    if transfer.m != source_model.m:
        raise DataError("transfer and source model dimensions differ")
    return (1.0 - transfer.theta) * source_model.eta


def target_marginal_loglik(
    transfer: DropoutTransfer, source_model: SourceModel, target: Dataset
) -> float:
    """Log-likelihood of the dichotomized target under the compound model."""
    if target.m != transfer.m:
        raise DataError("target and transfer dimensions differ")
    p = marginal_nonzero_probability(transfer, source_model)
    freq = nonzero_frequencies(target)
    nonzero = np.rint(freq.freq * freq.n)
    zero = freq.n - nonzero
    if np.any((nonzero > 0) & (p == 0)) or np.any((zero > 0) & (p == 1)):
        raise ModelError("target observation impossible under model")
    with np.errstate(divide="ignore"):
        log_p = np.where(nonzero > 0, np.log(p), 0.0)
        log_q = np.where(zero > 0, np.log1p(-p), 0.0)
    return float(np.sum(nonzero * log_p + zero * log_q))


def transfer_moments(x, transfer: DropoutTransfer) -> TransferMoments:
    """Mean and diagonal variance of the transferred sample given ``x``.

    Works on a single sample or row-wise on an ``n x m`` matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != transfer.m:
        raise DataError(f"sample has {x.shape[-1]} features, transfer has {transfer.m}")
    return TransferMoments(x.copy(), transfer.variance_factor * x**2)


def sample_transfer(x, transfer: DropoutTransfer, rng: np.random.Generator):
    """Draw a transferred sample (or one per row of a matrix) from the dropout model."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != transfer.m:
        raise DataError(f"sample has {x.shape[-1]} features, transfer has {transfer.m}")
    keep = rng.random(x.shape) >= transfer.theta
    return np.where(keep, x / (1.0 - transfer.theta), 0.0)


def save_transfer_table(transfer: DropoutTransfer, path, feature_names=None):
    """Write ``feature<TAB>theta`` lines; floats round-trip exactly."""
    names = feature_names or [str(d + 1) for d in range(transfer.m)]
    with open(path, "w") as fh:
        fh.write(f"# epsilon\t{transfer.epsilon!r}\n")
        fh.write("feature\ttheta\n")
        for name, t in zip(names, transfer.theta):
            fh.write(f"{name}\t{float(t)!r}\n")


def load_transfer_table(path):
    """Inverse of :func:`save_transfer_table`; returns ``(transfer, names)``."""
    path = Path(path)
    epsilon = DEFAULT_EPSILON
    names, theta = [], []
    with open(path) as fh:
        lines = fh.read().splitlines()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("\t")
            if key == "epsilon":
                epsilon = float(value)
            continue
        name, sep, value = line.partition("\t")
        if not sep:
            raise ParseError("expected 'feature<TAB>theta'", path, line_no)
        if (name, value) == ("feature", "theta"):
            continue
        try:
            theta.append(float(value))
        except ValueError:
            raise ParseError(f"bad theta {value!r}", path, line_no) from None
        names.append(name)
    return DropoutTransfer(np.array(theta), epsilon), names
