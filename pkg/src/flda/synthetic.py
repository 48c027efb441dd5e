"""Class-conditional Bernoulli and Poisson domains with dropout-corrupted targets.

Features are independent given the class.  Poisson counts come from numpy's
``Generator.poisson`` (seeded, so reproducible for a fixed numpy version).
Binary problems label class 0 as -1 and class 1 as +1; with more classes
the labels are the class ids.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import ConfigError
from .transfer import DropoutTransfer, sample_transfer

FAMILIES = ("bernoulli", "poisson")


@dataclass(frozen=True)
class SyntheticSpec:
    """Generative setup for one source/target domain pair.

    ``class_params`` holds one parameter vector per class: success
    probabilities for ``bernoulli``, rates for ``poisson``.
    """

    family: str
    class_params: tuple
    n: int = 100_000
    true_theta: tuple = ()
    priors: Optional[tuple] = None
    seed: int = 0
    validation_n: int = 10_000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        params = np.asarray(self.class_params, dtype=np.float64)
        if params.ndim != 2 or params.shape[0] < 2 or params.shape[1] < 1:
            raise ConfigError("class_params must be K >= 2 vectors of equal length m >= 1")
        if not np.all(np.isfinite(params)):
            raise ConfigError("class_params must be finite")
        if self.family == "bernoulli" and (np.any(params < 0) or np.any(params > 1)):
            raise ConfigError("Bernoulli parameters must lie in [0, 1]")
        if self.family == "poisson" and np.any(params <= 0):
            raise ConfigError("Poisson rates must be > 0")
        k, m = params.shape
        theta = np.zeros(m) if len(self.true_theta) == 0 else np.asarray(self.true_theta, float)
        if theta.shape != (m,) or np.any(theta < 0) or np.any(theta >= 1):
            raise ConfigError(f"true_theta must be {m} values in [0, 1)")
        priors = np.full(k, 1.0 / k) if self.priors is None else np.asarray(self.priors, float)
        if priors.shape != (k,) or np.any(priors < 0) or not np.isclose(priors.sum(), 1.0):
            raise ConfigError("priors must be K non-negative values summing to 1")
        if self.n < 1 or self.validation_n < 1:
            raise ConfigError("n and validation_n must be >= 1")
        object.__setattr__(self, "class_params", tuple(tuple(float(v) for v in r) for r in params))
        object.__setattr__(self, "true_theta", tuple(float(v) for v in theta))
        object.__setattr__(self, "priors", tuple(float(v) for v in priors))

    @property
    def m(self) -> int:
        return len(self.class_params[0])

    @property
    def n_classes(self) -> int:
        return len(self.class_params)

    @property
    def transfer(self) -> DropoutTransfer:
        return DropoutTransfer(np.array(self.true_theta))

    def replace(self, **changes) -> "SyntheticSpec":
        values = asdict(self)
        values.update(changes)
        return SyntheticSpec(**values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_params"] = [list(r) for r in self.class_params]
        d["true_theta"] = list(self.true_theta)
        d["priors"] = list(self.priors)
        return d


def bernoulli_spec(**overrides) -> SyntheticSpec:
    """Two classes with marginals 0.7/0.7 and 0.3/0.3, feature 1 dropped at rate 0.5."""
    base = dict(family="bernoulli", class_params=((0.3, 0.3), (0.7, 0.7)), true_theta=(0.5, 0.0))
    base.update(overrides)
    return SyntheticSpec(**base)


def poisson_spec(**overrides) -> SyntheticSpec:
    """Two classes with rates 2/2 and 6/6, feature 1 dropped at rate 0.5."""
    base = dict(family="poisson", class_params=((2.0, 2.0), (6.0, 6.0)), true_theta=(0.5, 0.0))
    base.update(overrides)
    return SyntheticSpec(**base)


PRESETS = {"bernoulli": bernoulli_spec, "poisson": poisson_spec}


def _labels_from_classes(classes, k):
    return 2 * classes - 1 if k == 2 else classes


def _draw(spec: SyntheticSpec, n: int, rng: np.random.Generator) -> Dataset:
    k = spec.n_classes
    classes = rng.choice(k, size=n, p=spec.priors)
    params = np.asarray(spec.class_params)[classes]
    if spec.family == "bernoulli":
        X = (rng.random((n, spec.m)) < params).astype(np.float64)
    else:
        X = rng.poisson(params).astype(np.float64)
    return Dataset(X, _labels_from_classes(classes, k), n_classes=k)


def generate_source(spec: SyntheticSpec, rng: np.random.Generator, n: Optional[int] = None) -> Dataset:
    """Labeled sample from the class-conditional source distribution."""
    return _draw(spec, spec.n if n is None else n, rng)


def generate_target(spec: SyntheticSpec, rng: np.random.Generator, n: Optional[int] = None) -> Dataset:
    """Fresh source-distribution sample pushed through the true dropout transfer.

    Labels are kept so that target errors can be measured.
    """
    fresh = _draw(spec, spec.n if n is None else n, rng)
    Z = sample_transfer(fresh.features, spec.transfer, rng)
    return Dataset(Z, fresh.labels, n_classes=fresh.n_classes)


@dataclass(frozen=True, eq=False)
class DomainPair:
    source: Dataset
    target: Dataset
    source_validation: Dataset
    target_validation: Dataset
    spec: SyntheticSpec = field(repr=False)


def generate_pair(spec: SyntheticSpec, n: Optional[int] = None) -> DomainPair:
    """Training and validation sets for both domains, all derived from ``spec.seed``.

    Each set has its own child stream of the seed, so changing ``n`` does not
    change the validation sets.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(4)]
    return DomainPair(
        generate_source(spec, streams[0], n),
        generate_target(spec, streams[1], n),
        generate_source(spec, streams[2], spec.validation_n),
        generate_target(spec, streams[3], spec.validation_n),
        spec,
    )


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def spec_from_mapping(section, base: Optional[SyntheticSpec] = None) -> SyntheticSpec:
    """Build a spec from string key/value pairs (a config section or CLI flags).

    Keys: ``preset``, ``family``, ``class_params`` (classes separated by
    ``;``, values by spaces or commas), ``n``, ``validation_n``,
    ``true_theta``, ``priors``, ``seed``.
    """
    section = {k: v for k, v in dict(section).items() if v is not None}
    try:
        if "preset" in section:
            preset = section.pop("preset")
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            base = PRESETS[preset]()
        values = {} if base is None else base.to_dict()
        if "family" in section:
            values["family"] = section["family"]
        if "class_params" in section:
            values["class_params"] = tuple(
                _floats(part) for part in str(section["class_params"]).split(";") if part.strip()
            )
        for key in ("n", "validation_n", "seed"):
            if key in section:
                values[key] = int(section[key])
        for key in ("true_theta", "priors"):
            if key in section:
                values[key] = _floats(str(section[key]))
    except ValueError as exc:
        raise ConfigError(f"bad synthetic setting: {exc}") from None
    if "family" not in values or "class_params" not in values:
        raise ConfigError("synthetic spec needs a preset or both family and class_params")
    return SyntheticSpec(**values)


def load_spec(path, section: str = "synthetic") -> SyntheticSpec:
    """Read a spec from an INI-style config file section."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if not parser.has_section(section):
        raise ConfigError(f"config file {path} has no [{section}] section")
    return spec_from_mapping(parser[section])


def save_spec(spec: SyntheticSpec, path, section: str = "synthetic"):
    """Write a spec as an INI section readable by :func:`load_spec`."""
    parser = configparser.ConfigParser()
    parser[section] = {
        "family": spec.family,
        "class_params": "; ".join(" ".join(repr(v) for v in r) for r in spec.class_params),
        "n": str(spec.n),
        "validation_n": str(spec.validation_n),
        "true_theta": " ".join(repr(v) for v in spec.true_theta),
        "priors": " ".join(repr(v) for v in spec.priors),
        "seed": str(spec.seed),
    }
    with open(path, "w") as fh:
        parser.write(fh)
