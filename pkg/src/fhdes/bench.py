"""Replicated experiments, the DSEL-size scalability study and report output.

Configs are flat ``key = value`` text files (``#`` starts a comment); see
``ExperimentConfig`` for the keys. Worker processes for replications are
capped by the ``FHDES_WORKERS`` environment variable.
"""
from __future__ import annotations

import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, load_csv, make_dataset, normalize, stratified_split
from .engine import DesMode, DesModel
from .hyperbox import MembershipKind
from .knn import KNORA_U, OLA, KnnModel
from .linear import Pool, train_pool

FH_METHODS = {
    "FH-DES-M": (DesMode.INCOMPETENCE, "sbm"),
    "FH-DES-C": (DesMode.COMPETENCE, "sbm"),
    "FH-GM": (DesMode.INCOMPETENCE, "gabrys"),
    "FH-GC": (DesMode.COMPETENCE, "gabrys"),
}
KNN_METHODS = (OLA, KNORA_U)
SINGLE_BEST = "SB"
ORACLE = "ORACLE"
METHODS = (*FH_METHODS, *KNN_METHODS, SINGLE_BEST, ORACLE)

WARMUP_CALLS = 50
LATENCY_BLOCK = 20


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything needed to rerun an experiment bit for bit.

    Exactly one of ``dataset`` (a CSV path) or ``generator`` (``banana`` or
    ``blobs``) must be set. ``n_samples``/``n_features`` only apply to
    generators; ``dsel_sizes``, ``train_size`` and ``test_size`` only to the
    scalability study. ``latency_queries = 0`` skips latency measurement.
    """

    dataset: str | None = None
    generator: str | None = None
    n_samples: int = 1000
    n_features: int = 5
    methods: tuple[str, ...] = ("FH-DES-M", "FH-DES-C", "OLA", "KNORA-U", "SB", "ORACLE")
    theta: float = 0.27
    mu: float = 0.99
    gamma: float = 1.0
    k: int = 7
    pool_size: int = 100
    replications: int = 20
    seed: int = 0
    fractions: tuple[float, ...] = (0.5, 0.25, 0.25)
    latency_queries: int = 1000
    dsel_sizes: tuple[int, ...] = (1000, 10000, 100000)
    train_size: int = 1000
    test_size: int = 1000
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.fractions = tuple(float(f) for f in self.fractions)
        self.dsel_sizes = tuple(int(s) for s in self.dsel_sizes)
        self.validate()

    def validate(self):
        if (self.dataset is None) == (self.generator is None):
            raise ConfigError("set exactly one of 'dataset' or 'generator'")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if not self.methods:
            raise ConfigError("no methods configured")
        if not 0 < self.theta <= 1:
            raise ConfigError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0 <= self.mu <= 1:
            raise ConfigError(f"mu must lie in [0, 1], got {self.mu}")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.k < 1 or self.pool_size < 1 or self.replications < 1:
            raise ConfigError("k, pool_size and replications must be at least 1")
        if any(f < 0 for f in self.fractions) or not np.isclose(sum(self.fractions), 1.0):
            raise ConfigError(f"fractions must be non-negative and sum to 1, got {list(self.fractions)}")
        if len(self.fractions) != 3:
            raise ConfigError("fractions needs three values: train, dsel, test")
        if self.latency_queries < 0:
            raise ConfigError("latency_queries must be non-negative")
        if self.format not in ("csv", "markdown"):
            raise ConfigError("format must be 'csv' or 'markdown'")

    def params(self) -> dict:
        return {"theta": self.theta, "mu": self.mu, "gamma": self.gamma, "k": self.k,
                "pool_size": self.pool_size, "replications": self.replications, "seed": self.seed}


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str | None":
            return raw or None
        if kind == "str":
            return raw
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if kind == "tuple[int, ...]":
            return tuple(int(s) for s in items)
        if kind == "tuple[float, ...]":
            return tuple(float(s) for s in items)
        return tuple(items)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse ``key = value`` lines; relative dataset paths resolve against ``base_dir``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    if base_dir is not None and values.get("dataset"):
        path = Path(values["dataset"])
        if not path.is_absolute():
            values["dataset"] = str(Path(base_dir) / path)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


# ---------------------------------------------------------------------------
# results


@dataclass
class MethodResult:
    method: str
    accuracies: list[float] = field(default_factory=list)
    latencies_us: list[float] = field(default_factory=list)
    member_boxes: list[np.ndarray] = field(default_factory=list)
    dsel_size: int | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        # population std, denominator R
        return float(np.std(self.accuracies))

    @property
    def mean_latency_us(self) -> float:
        return float(np.mean(self.latencies_us)) if self.latencies_us else float("nan")

    @property
    def boxes(self) -> float | None:
        if not self.member_boxes:
            return None
        return float(np.mean([b.sum() for b in self.member_boxes]))


@dataclass
class RunReport:
    results: list[MethodResult] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    scalability: bool = False

    def get(self, method: str, dsel_size: int | None = None) -> MethodResult:
        for r in self.results:
            if r.method == method and r.dsel_size == dsel_size:
                return r
        raise KeyError((method, dsel_size))


# ---------------------------------------------------------------------------
# fitting and measurement


def median_latency_us(predict_one, queries: np.ndarray, n_calls: int) -> float:
    """Median wall time of ``n_calls`` single-query calls, cycling through ``queries``."""
    for i in range(min(WARMUP_CALLS, n_calls)):
        predict_one(queries[i % len(queries)])
    times = np.empty(n_calls)
    clock = time.perf_counter_ns
    for i in range(n_calls):
        q = queries[i % len(queries)]
        t0 = clock()
        predict_one(q)
        times[i] = clock() - t0
    return float(np.median(times)) / 1e3


def interleaved_latency_us(predictors: list, queries: np.ndarray, n_calls: int,
                           block: int = LATENCY_BLOCK) -> list[float]:
    """Median single-query latency of several predictors, timed in alternation.

    Each predictor gets ``n_calls`` timed calls, issued ``block`` at a time in
    round-robin order, so drift in machine load hits all of them alike
    instead of whichever happened to be measured last. Blocks of a few calls
    (rather than strict alternation) keep one predictor from evicting the
    next one's data before every call.
    """
    clock = time.perf_counter_ns
    for f in predictors:
        for i in range(min(WARMUP_CALLS, n_calls)):
            f(queries[i % len(queries)])
    times = [np.empty(n_calls) for _ in predictors]
    for lo in range(0, n_calls, block):
        for f, t in zip(predictors, times):
            for i in range(lo, min(lo + block, n_calls)):
                q = queries[i % len(queries)]
                t0 = clock()
                f(q)
                t[i] = clock() - t0
    return [float(np.median(t)) / 1e3 for t in times]


def fit_method(method: str, pool: Pool, dsel_X, dsel_y, cfg: ExperimentConfig):
    """Return a fitted predictor exposing ``predict`` and ``predict_one``, or None for ORACLE."""
    if method in FH_METHODS:
        mode, kind = FH_METHODS[method]
        return DesModel.fit(pool, dsel_X, dsel_y, mode, cfg.theta,
                            MembershipKind.parse(kind, cfg.gamma), cfg.mu)
    if method in KNN_METHODS:
        return KnnModel(pool, dsel_X, dsel_y, cfg.k, method)
    if method == SINGLE_BEST:
        # best member on DSEL; ties go to the earliest member
        acc = (pool.predict_all(dsel_X) == np.asarray(dsel_y)[:, None]).mean(axis=0)
        return pool.members[int(np.argmax(acc))]
    if method == ORACLE:
        return None
    raise ConfigError(f"unknown method {method!r}")


def _evaluate(cfg: ExperimentConfig, pool: Pool, dsel_X, dsel_y, test_X, test_y):
    """Fit every method; returns {method: (accuracy, box counts or None, predictor)}."""
    out = {}
    for method in cfg.methods:
        model = fit_method(method, pool, dsel_X, dsel_y, cfg)
        if model is None:
            acc = float((pool.predict_all(test_X) == test_y[:, None]).any(axis=1).mean())
        else:
            acc = float(np.mean(model.predict(test_X) == test_y))
        boxes = model.box_counts if isinstance(model, DesModel) else None
        out[method] = (acc, boxes, model)
    return out


def _replication(cfg: ExperimentConfig, ds: Dataset, r: int):
    seed = cfg.seed + r
    train, dsel, test = stratified_split(ds, cfg.fractions, seed)
    d = normalize(ds, train)
    pool = train_pool(d.X[train], d.y[train], cfg.pool_size, seed)
    return _evaluate(cfg, pool, d.X[dsel], d.y[dsel], d.X[test], d.y[test]), d.X[test]


def _workers(n_tasks: int) -> int:
    raw = os.environ.get("FHDES_WORKERS")
    try:
        cap = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"FHDES_WORKERS must be an integer, got {raw!r}") from None
    return max(1, min(cap, n_tasks))


def load_dataset(cfg: ExperimentConfig, n_samples: int | None = None) -> Dataset:
    if cfg.dataset is not None:
        return load_csv(cfg.dataset)
    n = cfg.n_samples if n_samples is None else n_samples
    params = {"n_features": cfg.n_features} if cfg.generator == "blobs" else {}
    return make_dataset(cfg.generator, n, cfg.seed, **params)


def run_experiment(cfg: ExperimentConfig, ds: Dataset | None = None) -> RunReport:
    """Replicated train/DSEL/test experiment.

    Replication ``r`` splits with seed ``seed + r``, normalises on its train
    part, trains the pool with the same seed and scores every method on the
    test part. Replications may run in worker processes; latency is always
    measured afterwards in this process, one method at a time.
    """
    ds = load_dataset(cfg) if ds is None else ds
    reps = range(cfg.replications)
    workers = _workers(cfg.replications)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            outcomes = list(ex.map(_replication, [cfg] * len(reps), [ds] * len(reps), reps))
    else:
        outcomes = [_replication(cfg, ds, r) for r in reps]

    results = {m: MethodResult(m) for m in cfg.methods}
    for fitted, test_X in outcomes:
        for method, (acc, boxes, model) in fitted.items():
            res = results[method]
            res.accuracies.append(acc)
            if boxes is not None:
                res.member_boxes.append(boxes)
            if cfg.latency_queries and model is not None:
                res.latencies_us.append(median_latency_us(model.predict_one, test_X, cfg.latency_queries))
    return RunReport(list(results.values()), cfg.params())


def scalability_bench(cfg: ExperimentConfig) -> RunReport:
    """Accuracy, box counts and latency as the DSEL grows.

    The first ``train_size`` rows train the pool (once), the next
    ``test_size`` rows are the test set and DSEL sizes take nested prefixes
    of the remaining rows, so larger DSELs only add samples. All sizes are
    fitted first; latencies are then timed per method with the sizes
    interleaved (see ``interleaved_latency_us``).
    """
    sizes = cfg.dsel_sizes
    if not sizes:
        raise ConfigError("dsel_sizes is empty")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"DSEL sizes must be positive, got {list(sizes)}")
    needed = cfg.train_size + cfg.test_size + max(sizes)
    ds = load_dataset(cfg, n_samples=needed)
    if len(ds) < needed:
        raise DataError(f"data exhausted: {needed} rows needed, {len(ds)} available")
    train = np.arange(cfg.train_size)
    test = np.arange(cfg.train_size, cfg.train_size + cfg.test_size)
    start = cfg.train_size + cfg.test_size
    d = normalize(ds, train)
    pool = train_pool(d.X[train], d.y[train], cfg.pool_size, cfg.seed)
    test_X, test_y = d.X[test], d.y[test]

    report = RunReport(params=cfg.params(), scalability=True)
    models = {m: [] for m in cfg.methods}
    for size in sizes:
        dsel = slice(start, start + size)
        fitted = _evaluate(cfg, pool, d.X[dsel], d.y[dsel], test_X, test_y)
        for method, (acc, boxes, model) in fitted.items():
            res = MethodResult(method, [acc], dsel_size=size)
            if boxes is not None:
                res.member_boxes.append(boxes)
            report.results.append(res)
            models[method].append(model)
    if cfg.latency_queries:
        # one method at a time, all DSEL sizes interleaved
        for method, fitted_models in models.items():
            if fitted_models[0] is None:
                continue
            lat = interleaved_latency_us([m.predict_one for m in fitted_models], test_X, cfg.latency_queries)
            for size, value in zip(sizes, lat):
                report.get(method, size).latencies_us.append(value)
    return report


# ---------------------------------------------------------------------------
# output


def _format_row(r: MethodResult, scalability: bool) -> list[str]:
    lat = r.mean_latency_us
    boxes = r.boxes
    row = [r.method, f"{r.mean:.6f}", f"{r.std:.6f}",
           "" if np.isnan(lat) else f"{lat:.2f}",
           "" if boxes is None else f"{boxes:.1f}"]
    return ([str(r.dsel_size)] if scalability else []) + row


def emit_report(report: RunReport, format: str = "csv") -> str:
    """Render as CSV or an aligned markdown table; both show identical numbers.

    ``#`` lines at the top echo the parameters. Rows keep the configured
    method order (grouped by DSEL size for the scalability study).
    """
    columns = ["method", "mean", "std", "mean_latency_us", "boxes"]
    if report.scalability:
        columns = ["dsel_size"] + columns
    rows = [_format_row(r, report.scalability) for r in report.results]
    buf = io.StringIO()
    if report.params:
        buf.write("# " + " ".join(f"{k}={v}" for k, v in report.params.items()) + "\n")
    buf.write("# std is the population standard deviation (denominator R)\n")
    if format == "csv":
        for line in [columns] + rows:
            buf.write(",".join(line) + "\n")
    elif format == "markdown":
        widths = [max(len(line[i]) for line in [columns] + rows) for i in range(len(columns))]
        fmt = lambda line: "| " + " | ".join(c.ljust(w) for c, w in zip(line, widths)) + " |\n"
        buf.write(fmt(columns))
        buf.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
        for line in rows:
            buf.write(fmt(line))
    else:
        raise ConfigError(f"unknown report format {format!r}")
    return buf.getvalue()
