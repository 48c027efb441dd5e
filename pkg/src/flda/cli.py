"""Command-line interface: ``flda synth|fit|eval|bench``."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .classify import TrainConfig, load_model, predict, save_model, score
from .data import (
    load_delimited,
    load_sparse_indexed,
    save_delimited,
    save_sparse_indexed,
)
from .errors import ConfigError, FLDAError, OutputError
from .synthetic import generate_pair, save_spec, spec_from_mapping
from .transfer import fit_transfer, save_transfer_table

FORMATS_HELP = """\
file formats:
  delimited   one sample per line, cells split by --delimiter (default ",");
              optional header row (--header); the label sits in
              --label-column (default: last column; "none" for unlabeled
              files); cells equal to --missing-token are zero-imputed and
              flagged as missing.  Two distinct label values are mapped to
              -1/+1 in ascending order, more values to class ids 0..K-1.
  sparse      "<label> <index>:<value> ..." per line, 1-based strictly
              increasing indices; unlisted entries are zero.  Selected by
              --format sparse or a .svm/.libsvm/.sparse file extension.
  model       "# key: value" header lines (loss_kind, adapted, rows, cols,
              meta.*) followed by one row of weights per line; the last row
              is the bias.
  transfer    tab-separated "feature<TAB>theta" lines after a header.

config files (--config) are INI files with optional sections
  [synthetic] preset, family, class_params ("0.3 0.3; 0.7 0.7"), n,
              validation_n, true_theta, priors, seed
  [train]     l2, max_iter, grad_tol
  [bench]     sizes, repetitions, deltas, losses, jobs
  [data]      format, label_column, delimiter, missing_token, header
command-line flags override config values.

exit codes: 0 ok, 1 internal, 2 usage/config, 3 parse, 4 data, 5 model,
6 file input/output.
"""

SPARSE_SUFFIXES = {".svm", ".libsvm", ".sparse"}


def _read_config(path):
    parser = configparser.ConfigParser()
    if path is not None and not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    return parser


def _section(parser, name):
    return dict(parser[name]) if parser.has_section(name) else {}


def _pick(flag, section, key, cast=str, default=None):
    if flag is not None:
        return flag
    if key in section:
        try:
            return cast(section[key])
        except ValueError:
            raise ConfigError(f"bad value for {key}: {section[key]!r}") from None
    return default


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _bool(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _load(path, args, cfg, label_column=None):
    data = _section(cfg, "data")
    fmt = _pick(args.format, data, "format", default="auto")
    if fmt == "auto":
        fmt = "sparse" if Path(path).suffix.lower() in SPARSE_SUFFIXES else "delimited"
    if fmt == "sparse":
        return load_sparse_indexed(path)
    if fmt != "delimited":
        raise ConfigError(f"unknown format {fmt!r}")
    column = label_column or _pick(args.label_column, data, "label_column", default="-1")
    if str(column).lower() == "none":
        column = None
    return load_delimited(
        path,
        label_column=column,
        delimiter=_pick(args.delimiter, data, "delimiter", default=","),
        missing_token=_pick(args.missing_token, data, "missing_token"),
        header=bool(args.header) or _bool(data.get("header", "false")),
    )


def _train_config(args, cfg):
    train = _section(cfg, "train")
    return TrainConfig(
        l2=_pick(args.l2, train, "l2", float, 0.0),
        max_iter=_pick(args.max_iter, train, "max_iter", int, 5000),
        grad_tol=_pick(args.grad_tol, train, "grad_tol", float, 1e-5),
    )


def _spec(args, cfg, default_preset, default_n=None):
    section = _section(cfg, "synthetic")
    flags = {
        "preset": args.preset,
        "family": args.family,
        "class_params": args.class_params,
        "n": args.n,
        "true_theta": args.true_theta,
        "seed": args.seed,
    }
    for key, value in flags.items():
        if value is not None:
            section[key] = value
    if "family" not in section and "preset" not in section:
        section["preset"] = default_preset
    if default_n is not None and "n" not in section:
        section["n"] = default_n
    return spec_from_mapping(section)


def _losses(args, cfg):
    if args.losses is not None:
        text = args.losses
    else:
        text = _section(cfg, "bench").get("losses", "quadratic,logistic")
    losses = [s for s in text.replace(",", " ").split()]
    unknown = set(losses) - {"quadratic", "logistic"}
    if unknown:
        raise ConfigError(f"unknown losses {sorted(unknown)}")
    return losses


def cmd_synth(args, cfg):
    spec = _spec(args, cfg, "bernoulli")
    pair = generate_pair(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sparse = args.format == "sparse"
    suffix = ".svm" if sparse else ".csv"
    for name in ("source", "target", "source_validation", "target_validation"):
        ds = getattr(pair, name)
        path = out / f"{name}{suffix}"
        if sparse:
            save_sparse_indexed(ds, path)
        else:
            save_delimited(ds, path)
    save_transfer_table(spec.transfer, out / "true_transfer.tsv")
    save_spec(spec, out / "spec.ini")
    print(f"wrote domain pair ({spec.family}, n={spec.n}, seed={spec.seed}) to {out}")


def cmd_fit(args, cfg):
    config = _train_config(args, cfg)
    source = _load(args.source, args, cfg)
    target = None
    if args.target is not None:
        target = _load(args.target, args, cfg, label_column=args.target_label_column)
    transfer = None
    if args.classifier.startswith("flda"):
        if target is None:
            raise ConfigError(f"{args.classifier} needs --target")
        _, transfer = fit_transfer(source, target)
        if args.transfer_out:
            save_transfer_table(transfer, args.transfer_out, source.feature_names)
    model = bench.train_classifier(args.classifier, source, target, transfer, config)
    meta = dict(model.train_meta)
    if args.seed is not None:
        meta["seed"] = args.seed
    model = type(model)(model.weights, model.loss_kind, model.adapted, meta)
    save_model(model, args.out)
    print(f"saved {args.classifier} model to {args.out}")


def cmd_eval(args, cfg):
    model = load_model(args.model)
    data = _load(args.data, args, cfg)
    pred = predict(model, data)
    if args.out:
        np.savetxt(args.out, pred, fmt="%d")
    if data.labels is not None:
        print(f"error_rate {score(model, data)!r}")
    else:
        print(f"predicted {data.n} samples (no labels to score)")


def cmd_bench(args, cfg):
    bench_cfg = _section(cfg, "bench")
    config = _train_config(args, cfg)
    kind = args.experiment
    if kind == "boundary":
        result = bench.run_boundary(_spec(args, cfg, "bernoulli"), config, _losses(args, cfg))
    elif kind == "curve":
        sizes = args.sizes or bench_cfg.get("sizes", "2 5 10 20 50 100 200 500 1000")
        reps = _pick(args.repetitions, bench_cfg, "repetitions", int, 50)
        jobs = _pick(args.jobs, bench_cfg, "jobs", int, 1)
        spec = _spec(args, cfg, "poisson", default_n=10_000)
        result = bench.run_learning_curve(spec, _ints(sizes), reps, config, jobs)
    elif kind == "perturb":
        deltas = args.deltas or bench_cfg.get("deltas", "0 0.1 0.2 0.3")
        result = bench.run_perturbation(
            _spec(args, cfg, "poisson"), _floats(deltas), config, _losses(args, cfg)
        )
    elif kind == "pair":
        if not args.source or not args.target:
            raise ConfigError("bench pair needs --source and --target")
        source = _load(args.source, args, cfg)
        target = _load(args.target, args, cfg, label_column=args.target_label_column)
        result = bench.run_pair(
            source, target, config, _losses(args, cfg),
            {"source_path": str(args.source), "target_path": str(args.target)},
        )
    else:
        if not args.data:
            raise ConfigError("bench missing needs --data")
        dataset = _load(args.data, args, cfg)
        if dataset.missing_mask is None:
            raise ConfigError("bench missing needs --missing-token (or [data] missing_token)")
        result = bench.run_missing(
            dataset, config, _losses(args, cfg), {"data_path": str(args.data)}
        )
    written = bench.emit_results(result, args.out, include_timings=args.timings)
    for name, value in sorted(result.errors.items()):
        print(f"{name:>16s}  {value:.4f}")
    print(f"wrote {len(written)} files to {args.out}")


def _add_common(p, out_required=True):
    p.add_argument("--config", help="INI config file (see 'flda --help')")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--out", required=out_required, help="output file or directory")


def _add_data(p):
    g = p.add_argument_group("data files")
    g.add_argument("--format", choices=["auto", "delimited", "sparse"])
    g.add_argument("--label-column", help='index or header name; "none" if unlabeled')
    g.add_argument("--target-label-column", help="label column of the target file")
    g.add_argument("--delimiter")
    g.add_argument("--missing-token")
    g.add_argument("--header", action="store_true", help="files start with a header row")


def _add_train(p):
    g = p.add_argument_group("training")
    g.add_argument("--l2", type=float, help="ridge penalty for the naive baselines (default 0)")
    g.add_argument("--max-iter", type=int)
    g.add_argument("--grad-tol", type=float)


def _add_synth(p):
    g = p.add_argument_group("synthetic domains")
    g.add_argument("--preset", choices=["bernoulli", "poisson"])
    g.add_argument("--family", choices=["bernoulli", "poisson"])
    g.add_argument("--class-params", help='per-class parameters, e.g. "2 2; 6 6"')
    g.add_argument("--n", type=int, help="samples per domain")
    g.add_argument("--true-theta", help='dropout rates of the target, e.g. "0.5 0"')


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flda",
        description="Feature-level domain adaptation with dropout transfer models.",
        epilog=FORMATS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate and save a synthetic domain pair",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    _add_synth(p)
    p.add_argument("--format", choices=["delimited", "sparse"], default="delimited")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="train one classifier and save it",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    _add_data(p)
    _add_train(p)
    p.add_argument("--classifier", required=True,
                   choices=["flda-q", "flda-l", "s-ls", "s-lr", "ls", "lr"])
    p.add_argument("--source", required=True, help="labeled training file")
    p.add_argument("--target", help="target file (needed by flda-*)")
    p.add_argument("--transfer-out", help="also write the estimated transfer table here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score a saved model on a dataset",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p, out_required=False)
    _add_data(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run an experiment and write result files",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("experiment", choices=["boundary", "curve", "perturb", "pair", "missing"])
    _add_common(p)
    _add_data(p)
    _add_train(p)
    _add_synth(p)
    g = p.add_argument_group("experiment")
    g.add_argument("--losses", help='"quadratic", "logistic" or both (default)')
    g.add_argument("--sizes", help="learning-curve training sizes")
    g.add_argument("--repetitions", type=int, help="learning-curve repetitions (default 50)")
    g.add_argument("--jobs", type=int, help="parallel learning-curve cells")
    g.add_argument("--deltas", help="perturbations of the first dropout rate")
    g.add_argument("--source", help="pair: labeled source file")
    g.add_argument("--target", help="pair: target file")
    g.add_argument("--data", help="missing: dataset with missing values")
    g.add_argument("--timings", action="store_true", help="also write timings.csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _read_config(getattr(args, "config", None))
        args.func(args, cfg)
    except FLDAError as exc:
        print(f"flda: error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"flda: error[io]: {exc}", file=sys.stderr)
        return OutputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
