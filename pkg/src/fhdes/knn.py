"""OLA and KNORA-U: KNN-based dynamic selection baselines over the same pool.

Neighbours are found by an exact linear scan over the stored DSEL, so each
query costs O(|DSEL|).
"""
from __future__ import annotations

import numpy as np

from .engine import ConfigurationError, weighted_vote
from .hyperbox import DimensionError
from .linear import Pool

OLA = "OLA"
KNORA_U = "KNORA-U"


class KnnModel:
    def __init__(self, pool: Pool, dsel_X, dsel_y, k: int = 7, rule: str = KNORA_U):
        X = np.ascontiguousarray(dsel_X, dtype=np.float64)
        y = np.asarray(dsel_y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ConfigurationError("DSEL is empty")
        if X.shape[1] != pool.n:
            raise DimensionError(f"DSEL has {X.shape[1]} features, pool expects {pool.n}")
        if k < 1:
            raise ConfigurationError("k must be at least 1")
        if k > X.shape[0]:
            raise ConfigurationError(f"k={k} exceeds DSEL size {X.shape[0]}")
        if rule not in (OLA, KNORA_U):
            raise ConfigurationError(f"unknown rule {rule!r}")
        self.pool = pool
        self.dsel_X = X
        self.dsel_y = y
        self.k = int(k)
        self.rule = rule
        # (M, N) member-correct-on-DSEL bitmap, computed once
        self.correct = (pool.predict_all(X) == y[:, None]).T.copy()

    def knn_region(self, x) -> np.ndarray:
        """Indices of the k nearest DSEL rows, nearest first; ties go to the lower index."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dsel_X.shape[1],):
            raise DimensionError(f"expected {self.dsel_X.shape[1]} features, got shape {x.shape}")
        d = np.square(self.dsel_X - x).sum(axis=1)
        k = self.k
        if k < d.shape[0]:
            kth = np.partition(d, k - 1)[k - 1]
            closer = np.flatnonzero(d < kth)
            tied = np.flatnonzero(d == kth)[: k - closer.size]
            idx = np.concatenate([closer, tied])
        else:
            idx = np.arange(d.shape[0])
        # stable sort keeps lower indices first among equal distances
        return idx[np.argsort(d[idx], kind="stable")]

    def local_accuracy(self, x) -> np.ndarray:
        """Number of region points each member classifies correctly."""
        return self.correct[:, self.knn_region(x)].sum(axis=1)

    def ola_predict(self, x) -> int:
        best = int(np.argmax(self.local_accuracy(x)))
        return self.pool.members[best].predict_one(x)

    def knora_u_predict(self, x) -> int:
        hits = self.local_accuracy(x)
        votes = self.pool.predict_index_one(np.asarray(x, dtype=np.float64))
        return int(self.pool.classes[weighted_vote(votes, hits.astype(np.float64), len(self.pool.classes))])

    def predict_one(self, x) -> int:
        return self.ola_predict(x) if self.rule == OLA else self.knora_u_predict(x)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self.predict_one(x) for x in X], dtype=np.int64)
