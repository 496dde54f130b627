"""Command-line interface: ``fhdes {fit,predict,bench,scale}``.

Exit codes: 0 success, 1 usage error (bad flags, missing input files),
2 data error (malformed CSV, config or model file, dimension mismatch).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bench import ConfigError, emit_report, load_config, run_experiment, scalability_bench
from .data import DataError, load_csv, load_features, normalize, stratified_split
from .data import apply_normalization
from .engine import ConfigurationError, DesModel
from .hyperbox import DimensionError, MembershipKind
from .linear import TrainingError, train_pool
from .modelio import ModelFormatError, load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# model-building split: train the pool on 2/3, fit hyperboxes on the rest
FIT_FRACTIONS = (2 / 3, 1 / 3)

DATA_ERRORS = (DataError, DimensionError, ModelFormatError, TrainingError, ConfigurationError,
               ConfigError, UnicodeDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _unit_interval(lo_open: bool):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        ok = (0 < value <= 1) if lo_open else (0 <= value <= 1)
        if not ok:
            raise argparse.ArgumentTypeError(f"{value} is outside {'(0, 1]' if lo_open else '[0, 1]'}")
        return value
    return parse


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {value}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fhdes", description="Dynamic ensemble selection with fuzzy hyperboxes.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="train a pool and hyperbox model from a labelled CSV")
    fit.add_argument("--data", required=True, help="CSV with a header; last column is the label")
    fit.add_argument("--out", required=True, help="model file to write")
    fit.add_argument("--mode", choices=["C", "M"], default="M")
    fit.add_argument("--theta", type=_unit_interval(True), default=0.27)
    fit.add_argument("--mu", type=_unit_interval(False), default=0.99)
    fit.add_argument("--kind", choices=["gabrys", "sbm"], default="sbm")
    fit.add_argument("--gamma", type=_positive(float), default=1.0)
    fit.add_argument("--pool", type=_positive(int), default=100, help="pool size M")
    fit.add_argument("--seed", type=int, default=0)

    pred = sub.add_parser("predict", help="label the rows of a CSV with a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--out", required=True, help="output file, one label per row")

    for verb, text in (("bench", "run a replicated experiment"), ("scale", "run the DSEL-size study")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", help="report file (overrides the config's 'out')")
        p.add_argument("--format", choices=["csv", "markdown"], help="overrides the config's 'format'")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _require_file(path: str, flag: str):
    if not Path(path).is_file():
        raise UsageError(f"{flag}: no such file: {path}")


def cmd_fit(args) -> int:
    _require_file(args.data, "--data")
    ds = load_csv(args.data)
    train, dsel = stratified_split(ds, FIT_FRACTIONS, args.seed)
    d = normalize(ds, train)
    pool = train_pool(d.X[train], d.y[train], args.pool, args.seed)
    model = DesModel.fit(pool, d.X[dsel], d.y[dsel], args.mode, args.theta,
                         MembershipKind.parse(args.kind, args.gamma), args.mu)
    save_model(args.out, model, d.feature_mins, d.feature_maxs, ds.label_names)
    print(f"wrote {args.out}: {len(pool)} members, {int(model.box_counts.sum())} hyperboxes",
          file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    _require_file(args.model, "--model")
    _require_file(args.data, "--data")
    mf = load_model(args.model)
    X = load_features(args.data, mf.model.n)
    if mf.feature_mins is not None:
        X = apply_normalization(X, mf.feature_mins, mf.feature_maxs)
    labels = mf.model.predict(X) if len(X) else np.empty(0, dtype=np.int64)
    names = mf.label_names or tuple(str(c) for c in mf.model.pool.classes)
    with open(args.out, "w") as fh:
        for c in labels:
            fh.write(f"{names[c]}\n")
    return EXIT_OK


def _cmd_report(args, runner) -> int:
    _require_file(args.config, "--config")
    cfg = load_config(args.config)
    if cfg.dataset is not None:
        _require_file(cfg.dataset, "dataset")
    text = emit_report(runner(cfg), args.format or cfg.format)
    out = args.out or cfg.out
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "bench": lambda a: _cmd_report(a, run_experiment),
    "scale": lambda a: _cmd_report(a, scalability_bench),
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"fhdes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"fhdes: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
