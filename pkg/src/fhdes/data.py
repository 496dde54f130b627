"""Dataset loading, min-max normalisation, stratified splits and synthetic data."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = ""
    label_names: tuple[str, ...] = ()
    feature_mins: np.ndarray | None = None
    feature_maxs: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("X must be 2-D with one label per row")
        if not self.label_names:
            self.label_names = tuple(str(c) for c in range(int(self.y.max()) + 1)) if self.y.size else ()

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def subset(self, idx) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx])


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"row {row}: column {col} is not numeric ({cell!r})") from None
    if not np.isfinite(value):
        raise DataError(f"row {row}: column {col} is not finite ({cell!r})")
    return value


def load_csv(path, name: str | None = None) -> Dataset:
    """Read a headed CSV whose last column is the class label.

    Labels are remapped to ``0..L-1`` in order of first appearance. Row
    numbers in error messages are 1-based file lines (the header is line 1).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    if not body:
        raise DataError(f"{path}: no data rows after the header")
    width = len(header)
    features, labels = [], []
    codes: dict[str, int] = {}
    for line, r in enumerate(body, start=2):
        if len(r) != width:
            raise DataError(f"row {line}: expected {width} cells, found {len(r)}")
        features.append([_parse_float(c.strip(), line, j + 1) for j, c in enumerate(r[:-1])])
        label = r[-1].strip()
        if not label:
            raise DataError(f"row {line}: missing label")
        labels.append(codes.setdefault(label, len(codes)))
    if len(codes) < 2:
        raise DataError(f"{path}: the label column holds a single class")
    return Dataset(np.array(features), np.array(labels), name or path.stem, tuple(codes))


def load_features(path, n_features: int) -> np.ndarray:
    """Read a headed CSV of query rows for prediction.

    Rows may hold exactly ``n_features`` cells, or one more (a trailing label
    column, which is ignored). Every row must have the same width.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    width = len(rows[0])
    if width not in (n_features, n_features + 1):
        raise DataError(f"{path}: model expects {n_features} feature columns "
                        f"(optionally plus a label), file has {width}")
    out = np.empty((len(rows) - 1, n_features))
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != width:
            raise DataError(f"row {line}: expected {width} cells, found {len(r)}")
        out[line - 2] = [_parse_float(c.strip(), line, j + 1) for j, c in enumerate(r[:n_features])]
    return out


def apply_normalization(X, mins: np.ndarray, maxs: np.ndarray) -> np.ndarray:
    """Map columns to [0, 1] with stored min/max; constant columns go to 0.5."""
    X = np.asarray(X, dtype=np.float64)
    span = maxs - mins
    const = span == 0
    out = (X - mins) / np.where(const, 1.0, span)
    out[:, const] = 0.5
    return np.clip(out, 0.0, 1.0)


def normalize(ds: Dataset, fit_rows) -> Dataset:
    """Min-max scale every row using statistics of ``fit_rows`` only."""
    fit_rows = np.asarray(fit_rows)
    if fit_rows.size == 0:
        raise DataError("normalisation needs at least one fitting row")
    ref = ds.X[fit_rows]
    mins, maxs = ref.min(axis=0), ref.max(axis=0)
    return replace(ds, X=apply_normalization(ds.X, mins, maxs), feature_mins=mins, feature_maxs=maxs)


def stratified_split(ds: Dataset, fractions=(0.5, 0.25, 0.25), seed: int = 0) -> tuple[np.ndarray, ...]:
    """Partition row indices into parts with the class mix of the full set.

    Each class is shuffled and cut into ``floor(n_c * f)`` rows per part; the
    few leftover rows go to the parts in order of decreasing fraction. Each
    part is shuffled again so classes interleave.
    """
    fractions = np.asarray(fractions, dtype=np.float64)
    if np.any(fractions < 0) or not np.isclose(fractions.sum(), 1.0):
        raise DataError(f"split fractions must be non-negative and sum to 1, got {fractions.tolist()}")
    rng = np.random.default_rng(seed)
    order = np.argsort(-fractions, kind="stable")
    parts: list[list[np.ndarray]] = [[] for _ in fractions]
    for c in np.unique(ds.y):
        rows = np.flatnonzero(ds.y == c)
        if rows.size < 4:
            raise DataError(f"class {c} has only {rows.size} samples; at least 4 are needed")
        rows = rng.permutation(rows)
        counts = np.floor(rows.size * fractions + 1e-9).astype(int)
        for j in range(rows.size - counts.sum()):
            counts[order[j % len(order)]] += 1
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for p in range(len(fractions)):
            parts[p].append(rows[bounds[p]:bounds[p + 1]])
    return tuple(rng.permutation(np.concatenate(p)) for p in parts)


# ---------------------------------------------------------------------------
# synthetic generators


def make_banana(n_samples: int = 1000, seed: int = 0, noise: float = 1.75, radius: float = 5.0) -> Dataset:
    """Two interleaved, noisy crescents in 2-D with balanced classes."""
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.arange(n_samples) % 2)
    u = rng.random(n_samples)
    angle = np.where(y == 0, 0.125 * np.pi + 1.25 * np.pi * u, 0.375 * np.pi - 1.25 * np.pi * u)
    X = radius * np.column_stack([np.sin(angle), np.cos(angle)])
    X[y == 1] += np.array([-0.75 * radius, -0.5 * radius])
    X += noise * rng.standard_normal((n_samples, 2))
    return Dataset(X, y, "banana", ("a", "b"))


def make_blobs(n_samples: int = 1000, n_features: int = 5, seed: int = 0, n_informative: int = 2,
               n_redundant: int = 2, clusters_per_class: int = 2, class_sep: float = 1.0,
               n_classes: int = 2, flip_y: float = 0.01) -> Dataset:
    """Gaussian clusters on hypercube vertices, in the style of ``make_classification``.

    ``n_informative`` columns hold the clusters (one per vertex of a
    ``2 * class_sep`` hypercube, randomly sheared); ``n_redundant`` columns
    are random linear mixes of them; the rest are pure noise. A fraction
    ``flip_y`` of labels is reassigned at random.

    Cluster geometry is fixed by ``seed`` and samples are drawn in fixed-size
    blocks, so a larger ``n_samples`` with the same seed extends the smaller
    draw row for row.
    """
    if n_informative + n_redundant > n_features:
        raise ValueError("n_informative + n_redundant exceeds n_features")
    n_clusters = n_classes * clusters_per_class
    if n_clusters > 2 ** n_informative:
        raise ValueError("too few informative features for the requested clusters")
    rng = np.random.default_rng(seed)
    vertices = rng.choice(2 ** n_informative, size=n_clusters, replace=False)
    bits = (vertices[:, None] >> np.arange(n_informative)) & 1
    centres = class_sep * (2.0 * bits - 1.0)
    shear = 2.0 * rng.random((n_clusters, n_informative, n_informative)) - 1.0
    mix = 2.0 * rng.random((n_informative, n_redundant)) - 1.0
    n_noise = n_features - n_informative - n_redundant

    X = np.empty((n_samples, n_features))
    y = np.empty(n_samples, dtype=np.int64)
    block = 4096
    stream = np.random.default_rng([seed, 1])
    for start in range(0, n_samples, block):
        # always draw whole blocks so the stream does not depend on n_samples
        cluster = stream.integers(0, n_clusters, size=block)
        z = stream.standard_normal((block, n_informative))
        noise = stream.standard_normal((block, n_noise))
        flip = stream.random(block) < flip_y
        relabel = stream.integers(0, n_classes, size=block)
        m = min(block, n_samples - start)
        c = cluster[:m]
        info = np.einsum("qij,qj->qi", shear[c], z[:m]) + centres[c]
        X[start:start + m] = np.hstack([info, info @ mix, noise[:m]])
        y[start:start + m] = np.where(flip[:m], relabel[:m], c % n_classes)
    return Dataset(X, y, f"blobs{n_features}d", tuple(str(c) for c in range(n_classes)))


GENERATORS = {"banana": make_banana, "blobs": make_blobs}


def make_dataset(name: str, n_samples: int, seed: int = 0, **params) -> Dataset:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise DataError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    return gen(n_samples=n_samples, seed=seed, **params)
