"""Multiclass perceptrons and bagged pools of them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hyperbox import DimensionError

MAX_BOOTSTRAP_RETRIES = 100


class TrainingError(ValueError):
    pass


def affine_scores(W: np.ndarray, b: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``b + sum_d W[..., d] * x[d]`` for each row of ``X``; shape ``X.shape[:-1] + b.shape``.

    Accumulated one feature at a time with elementwise ops, so scoring a row
    alone or inside a batch gives bitwise-identical results.
    """
    lead = X.shape[:-1]
    Xe = X.reshape(lead + (1,) * b.ndim + X.shape[-1:])
    out = np.broadcast_to(b, lead + b.shape).copy()
    for d in range(W.shape[-1]):
        out += W[..., d] * Xe[..., d]
    return out


@dataclass(eq=False)
class LinearClassifier:
    """One weight row and bias per class; predicts the highest-scoring class.

    ``classes`` holds the integer label ids in ascending order, so the
    first-index tie break of ``argmax`` is also a lowest-id tie break.
    """

    weights: np.ndarray
    biases: np.ndarray
    classes: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.classes = np.asarray(self.classes, dtype=np.int64)
        L = self.classes.shape[0]
        if L < 2:
            raise ValueError("a classifier needs at least two classes")
        if self.weights.shape[0] != L or self.biases.shape != (L,):
            raise ValueError("weights/biases do not match the number of classes")
        if np.any(np.diff(self.classes) <= 0):
            raise ValueError("classes must be strictly increasing")

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} features, got {X.shape[-1]}")
        return affine_scores(self.weights, self.biases, X)

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(np.atleast_2d(X)), axis=-1)]

    def predict_one(self, x) -> int:
        return int(self.classes[np.argmax(self.decision_function(x))])

    def __eq__(self, other):
        if not isinstance(other, LinearClassifier):
            return NotImplemented
        return (np.array_equal(self.weights, other.weights)
                and np.array_equal(self.biases, other.biases)
                and np.array_equal(self.classes, other.classes))


def train_perceptron(X, y, max_iter: int = 100, tol: float = 1e-3, alpha: float = 0.001,
                     seed: int = 0, n_iter_no_change: int = 5,
                     classes=None) -> LinearClassifier:
    """Train a one-vs-rest perceptron with per-sample updates.

    All class rows update together: for each sample, every row whose sign
    disagrees with its one-vs-rest target gets ``w += t * x``. Weights shrink
    by ``(1 - alpha)`` on every step (L2 penalty, unit learning rate).
    Samples are reshuffled every epoch from ``seed``.

    Training stops after ``max_iter`` epochs, when the training error reaches
    zero, or when the error rate has not improved on its best value by at
    least ``tol`` for ``n_iter_no_change`` consecutive epochs. The weights of
    the best epoch are returned (pocket rule).

    ``classes`` fixes the label universe (rows are created for every class
    even if some are absent from ``y``).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one label per row")
    present = np.unique(y)
    if present.size < 2:
        raise TrainingError("training labels contain a single class")
    classes = present if classes is None else np.asarray(classes, dtype=np.int64)
    L, n = classes.size, X.shape[1]
    # one-vs-rest targets in {-1, +1}
    T = np.where(y[:, None] == classes[None, :], 1.0, -1.0)

    rng = np.random.default_rng(seed)
    W = np.zeros((L, n))
    b = np.zeros(L)
    shrink = 1.0 - alpha
    best_err, best_W, best_b = np.inf, W.copy(), b.copy()
    stall = 0
    for _ in range(max_iter):
        for i in rng.permutation(X.shape[0]):
            x, t = X[i], T[i]
            wrong = t * (W @ x + b) <= 0.0
            W *= shrink
            if wrong.any():
                W[wrong] += t[wrong, None] * x
                b[wrong] += t[wrong]
        err = np.mean(classes[np.argmax(X @ W.T + b, axis=1)] != y)
        if err < best_err - tol or err == 0.0:
            best_err, best_W, best_b = err, W.copy(), b.copy()
            stall = 0
        else:
            stall += 1
        if err == 0.0 or stall >= n_iter_no_change:
            break
    return LinearClassifier(best_W, best_b, classes)


class Pool:
    """An ordered, immutable ensemble of linear classifiers over one label set."""

    def __init__(self, members: list[LinearClassifier], seed: int = 0):
        if not members:
            raise ValueError("a pool needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.n != first.n or not np.array_equal(m.classes, first.classes):
                raise ValueError("pool members must share dimensionality and labels")
        self.members = list(members)
        self.seed = int(seed)
        self.classes = first.classes
        self.n = first.n
        # stacked for one-shot prediction of every member
        self._W = np.stack([m.weights for m in members])  # (M, L, n)
        self._b = np.stack([m.biases for m in members])   # (M, L)

    def __len__(self) -> int:
        return len(self.members)

    def predict_index_one(self, x: np.ndarray) -> np.ndarray:
        """Class index (into ``classes``) predicted by every member for one point."""
        return np.argmax(affine_scores(self._W, self._b, x), axis=1)

    def predict_index(self, X: np.ndarray) -> np.ndarray:
        """``(Q, M)`` class indices predicted by every member for each row of X."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} features, got {X.shape[-1]}")
        return np.argmax(affine_scores(self._W, self._b, X), axis=-1)

    def predict_all(self, X) -> np.ndarray:
        return self.classes[self.predict_index(np.atleast_2d(X))]

    def __eq__(self, other):
        if not isinstance(other, Pool):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self.members, other.members))


def member_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def bootstrap_indices(rng: np.random.Generator, y: np.ndarray) -> np.ndarray:
    """Draw a size-|y| bootstrap containing at least two classes."""
    size = y.shape[0]
    for _ in range(MAX_BOOTSTRAP_RETRIES):
        idx = rng.integers(0, size, size=size)
        if np.unique(y[idx]).size >= 2:
            return idx
    raise TrainingError(f"no usable bootstrap after {MAX_BOOTSTRAP_RETRIES} draws")


def train_pool(X, y, M: int = 100, seed: int = 0, max_iter: int = 100, tol: float = 1e-3,
               alpha: float = 0.001, bootstrap: bool = True) -> Pool:
    """Bagging: member ``i`` is trained on a bootstrap drawn from stream ``(seed, i)``.

    ``bootstrap=False`` trains every member on the full set in the given order
    (the per-member shuffle seed still differs).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if M < 1:
        raise ValueError("pool size must be at least 1")
    classes = np.unique(y)
    if classes.size < 2:
        raise TrainingError("training labels contain a single class")
    members = []
    for i in range(M):
        rng = member_rng(seed, i)
        idx = bootstrap_indices(rng, y) if bootstrap else np.arange(y.shape[0])
        member_seed = int(rng.integers(2**63))
        members.append(train_perceptron(X[idx], y[idx], max_iter, tol, alpha,
                                        seed=member_seed, classes=classes))
    return Pool(members, seed)
