"""Experiment harness: artificial-data studies and source/target evaluations.

Every experiment returns an :class:`ExperimentResult` that :func:`emit_results`
writes as ``result.json`` plus flat CSV tables.  Wall-clock timings are kept
on the result object but are only written when asked for, so that repeated
runs with the same configuration produce byte-identical files.

Seeds: a synthetic pair is generated from ``spec.seed``; learning-curve
repetition ``r`` draws its subsamples from ``spec.seed + r``.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import (
    LinearModel,
    TrainConfig,
    fit_flda_l,
    fit_flda_q,
    fit_lr,
    fit_ls,
    multiclass_fit_flda_q,
    predict,
    score,
)
from .data import Dataset, missing_data_split, subsample
from .errors import DataError, OutputError
from .synthetic import SyntheticSpec, generate_pair
from .transfer import DropoutTransfer, fit_transfer

log = logging.getLogger(__name__)

QUADRATIC = ("s-ls", "t-ls", "flda-q")
LOGISTIC = ("s-lr", "t-lr", "flda-l")


@dataclass
class ExperimentResult:
    experiment: str
    config: dict
    errors: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    boundaries: dict = field(default_factory=dict)
    scatter: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not (self.errors or self.tables or self.boundaries)


def train_classifier(
    name: str,
    source: Dataset,
    target: Dataset | None = None,
    transfer: DropoutTransfer | None = None,
    config: TrainConfig = TrainConfig(),
) -> LinearModel:
    """Train one of the named classifiers.

    ``s-*`` train on the source, ``t-*`` on the (labeled) target, and
    ``flda-*`` on the source under ``transfer`` (estimated from source and
    target when not given).
    """
    if name in ("s-ls", "ls"):
        return fit_ls(source, config)
    if name in ("s-lr", "lr"):
        return fit_lr(source, config)
    if name in ("t-ls", "t-lr"):
        if target is None or target.labels is None:
            raise DataError(f"{name} needs a labeled target dataset")
        return fit_ls(target, config) if name == "t-ls" else fit_lr(target, config)
    if name in ("flda-q", "flda-l"):
        if transfer is None:
            if target is None:
                raise DataError(f"{name} needs target data or a transfer model")
            _, transfer = fit_transfer(source, target)
        if name == "flda-l":
            return fit_flda_l(source, transfer, config)
        if source.is_binary:
            return fit_flda_q(source, transfer)
        return multiclass_fit_flda_q(source, transfer)
    raise DataError(f"unknown classifier {name!r}")


def _timed(timings, key, fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    timings[key] = time.perf_counter() - start
    return out


def _classifiers(losses):
    names = []
    if "quadratic" in losses:
        names += QUADRATIC
    if "logistic" in losses:
        names += LOGISTIC
    if not names:
        raise DataError("no loss selected")
    return names


def disagreement(a: LinearModel, b: LinearModel, dataset: Dataset) -> float:
    """Fraction of samples on which two classifiers predict different labels."""
    return float(np.mean(predict(a, dataset) != predict(b, dataset)))


def _boundary(model: LinearModel):
    return [float(v) for v in model.weights] if not model.multiclass else None


def _scatter(dataset: Dataset):
    return dataset.dense(), dataset.labels


def run_boundary(
    spec: SyntheticSpec,
    config: TrainConfig = TrainConfig(),
    losses: Sequence[str] = ("quadratic", "logistic"),
) -> ExperimentResult:
    """Source, target and adapted classifiers on one generated domain pair.

    ``errors`` are measured on the target training sample (the transductive
    setting); the table also reports both fixed validation sets, and
    ``extra["disagreement"]`` compares each adapted classifier with its
    target-trained counterpart on the target validation set.
    """
    timings = {}
    pair = _timed(timings, "generate", generate_pair, spec)
    _, transfer = fit_transfer(pair.source, pair.target)
    models = {
        name: _timed(timings, name, train_classifier, name, pair.source, pair.target, transfer, config)
        for name in _classifiers(losses)
    }
    rows, errors = [], {}
    for name, model in models.items():
        errors[name] = score(model, pair.target)
        rows.append(
            {
                "classifier": name,
                "target_error": errors[name],
                "target_validation_error": score(model, pair.target_validation),
                "source_validation_error": score(model, pair.source_validation),
            }
        )
    agree = {}
    for adapted, reference in (("flda-q", "t-ls"), ("flda-l", "t-lr")):
        if adapted in models:
            agree[f"{adapted}_vs_{reference}"] = disagreement(
                models[adapted], models[reference], pair.target_validation
            )
    result = ExperimentResult(
        "boundary",
        {"spec": spec.to_dict(), "train": asdict(config), "losses": list(losses)},
        errors=errors,
        tables={"errors": rows},
        extra={
            "theta_hat": transfer.theta.tolist(),
            "true_theta": list(spec.true_theta),
            "disagreement": agree,
        },
        timings=timings,
    )
    if spec.m == 2:
        result.boundaries = {name: _boundary(m) for name, m in models.items() if not m.multiclass}
        result.scatter = {
            "source": _scatter(pair.source_validation),
            "target": _scatter(pair.target_validation),
        }
    return result


def _curve_cell(pair, size, rep, base_seed, config):
    seed = base_seed + rep
    src = subsample(pair.source, size, [seed, 0])
    tgt = subsample(pair.target, size, [seed, 1])
    _, transfer = fit_transfer(src, tgt.unlabeled())
    models = {
        "s-ls": fit_ls(src, config),
        "t-ls": fit_ls(tgt, config),
        "flda-q": train_classifier("flda-q", src, transfer=transfer),
    }
    out = []
    for name, model in models.items():
        for domain, val in (("source", pair.source_validation), ("target", pair.target_validation)):
            out.append(
                {"size": size, "repetition": rep, "seed": seed, "classifier": name,
                 "domain": domain, "error": score(model, val)}
            )
    return out


def run_learning_curve(
    spec: SyntheticSpec,
    sizes: Sequence[int],
    repetitions: int = 50,
    config: TrainConfig = TrainConfig(),
    jobs: int = 1,
) -> ExperimentResult:
    """Validation error of s-ls, t-ls and flda-q as a function of training size.

    ``spec.n`` is the size of each training pool; subsamples of every size
    are drawn per repetition and the fixed validation sets are shared by all
    cells.  Reports the mean and standard error of the mean per point.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise DataError("sizes must be strictly ascending")
    if repetitions < 2:
        raise DataError("need at least 2 repetitions for a standard error")
    if sizes[0] < 1 or sizes[-1] > spec.n:
        raise DataError(f"sizes must lie in [1, {spec.n}] (the generated pool)")
    timings = {}
    pair = _timed(timings, "generate", generate_pair, spec)
    cells = [(size, rep) for size in sizes for rep in range(repetitions)]

    def work(cell):
        start = time.perf_counter()
        out = _curve_cell(pair, cell[0], cell[1], spec.seed, config)
        return out, time.perf_counter() - start

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(work, cells))
    else:
        outputs = [work(c) for c in cells]
    raw = []
    for cell, (rows, seconds) in zip(cells, outputs):
        raw.extend(rows)
        timings[f"size={cell[0]},rep={cell[1]}"] = seconds

    summary = []
    for size in sizes:
        for name in QUADRATIC:
            for domain in ("source", "target"):
                errs = np.array(
                    [r["error"] for r in raw
                     if r["size"] == size and r["classifier"] == name and r["domain"] == domain]
                )
                summary.append(
                    {"size": size, "classifier": name, "domain": domain,
                     "mean": float(errs.mean()),
                     "sem": float(errs.std(ddof=1) / np.sqrt(errs.size)),
                     "repetitions": int(errs.size)}
                )
    return ExperimentResult(
        "curve",
        {"spec": spec.to_dict(), "train": asdict(config), "sizes": sizes,
         "repetitions": repetitions},
        tables={"curve": summary, "curve_cells": raw},
        timings=timings,
    )


def run_perturbation(
    spec: SyntheticSpec,
    deltas: Sequence[float] = (0.0, 0.1, 0.2, 0.3),
    config: TrainConfig = TrainConfig(),
    losses: Sequence[str] = ("quadratic", "logistic"),
    feature: int = 0,
) -> ExperimentResult:
    """Sensitivity of FLDA to errors in one estimated dropout rate.

    Trains naive source (sl) and target (tl) classifiers and one adapted
    classifier per ``delta`` added to ``theta_hat[feature]``, for each loss.
    Errors are measured on the target training sample.
    """
    timings = {}
    pair = _timed(timings, "generate", generate_pair, spec)
    _, transfer = fit_transfer(pair.source, pair.target)
    perturbed = [transfer.perturbed(feature, d) for d in deltas]
    rows, errors, boundaries = [], {}, {}
    for loss in losses:
        suffix, adapt = {"quadratic": ("ls", "flda-q"), "logistic": ("lr", "flda-l")}[loss]
        row = {"loss": loss}
        named = [("sl", f"s-{suffix}", transfer), ("tl", f"t-{suffix}", transfer)]
        named += [(f"delta={d:g}", adapt, t) for d, t in zip(deltas, perturbed)]
        for column, clf, t in named:
            key = f"{loss}/{column}"
            model = _timed(timings, key, train_classifier, clf, pair.source, pair.target, t, config)
            row[column] = errors[key] = score(model, pair.target)
            if spec.m == 2 and not model.multiclass:
                boundaries[f"{loss}_{column}"] = _boundary(model)
        rows.append(row)
    result = ExperimentResult(
        "perturb",
        {"spec": spec.to_dict(), "train": asdict(config), "deltas": list(deltas),
         "losses": list(losses), "feature": feature},
        errors=errors,
        tables={"perturbation": rows},
        boundaries=boundaries,
        extra={"theta_hat": transfer.theta.tolist()},
        timings=timings,
    )
    if spec.m == 2:
        result.scatter = {"target": _scatter(pair.target)}
    return result


def run_pair(
    source: Dataset,
    target: Dataset,
    config: TrainConfig = TrainConfig(),
    losses: Sequence[str] = ("quadratic", "logistic"),
    options: dict | None = None,
) -> ExperimentResult:
    """Naive and adapted classifiers trained on ``source``, scored on ``target``.

    Target labels are optional; without them no errors are reported and the
    target-trained classifiers are skipped.  The estimated dropout rates are
    reported as a table.
    """
    if source.labels is None:
        raise DataError("source data must be labeled")
    if source.m != target.m:
        raise DataError(f"source has {source.m} features, target has {target.m}")
    if target.n == 0:
        raise DataError("target dataset is empty")
    timings = {}
    _, transfer = fit_transfer(source, target)
    names = [n for n in _classifiers(losses) if target.labels is not None or not n.startswith("t-")]
    models = {
        name: _timed(timings, name, train_classifier, name, source, target, transfer, config)
        for name in names
    }
    errors, rows = {}, []
    if target.labels is not None:
        for name, model in models.items():
            errors[name] = score(model, target)
            rows.append({"classifier": name, "target_error": errors[name]})
    feature_names = source.feature_names or [str(d + 1) for d in range(source.m)]
    theta_rows = [{"feature": f, "theta": float(t)} for f, t in zip(feature_names, transfer.theta)]
    tables = {"transfer": theta_rows}
    if rows:
        tables["errors"] = rows
    return ExperimentResult(
        "pair",
        {"train": asdict(config), "losses": list(losses), "source_n": source.n,
         "target_n": target.n, "m": source.m, **(options or {})},
        errors=errors,
        tables=tables,
        extra={"theta_hat": transfer.theta.tolist()},
        timings=timings,
    )


def run_missing(
    dataset: Dataset,
    config: TrainConfig = TrainConfig(),
    losses: Sequence[str] = ("quadratic", "logistic"),
    options: dict | None = None,
) -> ExperimentResult:
    """Missing-data-at-test-time scenario: complete rows train, incomplete rows test."""
    source, target = missing_data_split(dataset)
    if target.n == 0:
        raise DataError("no rows with missing values: the target domain is empty")
    result = run_pair(source, target, config, losses, options)
    result.experiment = "missing"
    result.config["total_n"] = dataset.n
    return result


def _write_csv(path: Path, rows: list):
    if not rows:
        path.write_text("")
        return
    columns = list(rows[0])
    for row in rows[1:]:
        columns += [c for c in row if c not in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})


def _cell(value):
    return repr(value) if isinstance(value, float) else value


def _line_points(weights, xs):
    w1, w2, b = weights
    lo, hi = float(np.min(xs[:, 0])), float(np.max(xs[:, 0]))
    if w2 != 0:
        return [(x, -(b + w1 * x) / w2) for x in (lo, hi)]
    if w1 != 0:
        y_lo, y_hi = float(np.min(xs[:, 1])), float(np.max(xs[:, 1]))
        return [(-b / w1, y) for y in (y_lo, y_hi)]
    return []


def emit_results(result: ExperimentResult, out_dir, include_timings: bool = False) -> list:
    """Write ``result.json``, one CSV per table, and plot data for boundaries.

    Boundary plots get ``scatter_<domain>.csv`` (x1, x2, label) and
    ``line_<classifier>.csv`` (two points on the decision line).  Returns
    the written paths.
    """
    if result.empty:
        raise DataError("result holds no experiments; nothing written")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        doc = {
            "experiment": result.experiment,
            "config": result.config,
            "errors": result.errors,
            "extra": result.extra,
            "boundaries": result.boundaries,
            "tables": sorted(result.tables),
        }
        path = out / "result.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        written.append(path)
        for name, rows in sorted(result.tables.items()):
            path = out / f"{name}.csv"
            _write_csv(path, rows)
            written.append(path)
        points = None
        for domain, (X, y) in sorted(result.scatter.items()):
            path = out / f"scatter_{domain}.csv"
            _write_csv(
                path,
                [{"x1": float(a), "x2": float(b), "label": int(c)} for (a, b), c in zip(X, y)],
            )
            written.append(path)
            points = X if points is None else np.vstack([points, X])
        if points is not None:
            for name, weights in sorted(result.boundaries.items()):
                if weights is None:
                    continue
                path = out / f"line_{name}.csv"
                _write_csv(path, [{"x1": a, "x2": b} for a, b in _line_points(weights, points)])
                written.append(path)
        if include_timings:
            path = out / "timings.csv"
            _write_csv(path, [{"cell": k, "seconds": v} for k, v in sorted(result.timings.items())])
            written.append(path)
    except OSError as exc:
        raise OutputError(f"cannot write results to {out}: {exc}") from exc
    log.info("wrote %d files to %s", len(written), out)
    return written
