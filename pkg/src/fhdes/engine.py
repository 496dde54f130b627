"""Dynamic ensemble selection driven by per-classifier fuzzy hyperboxes.

For each pool member the DSEL samples it classifies correctly (mode ``C``)
or wrongly (mode ``M``) are covered by hyperboxes. At query time a member's
competence is the mean of its two highest box memberships (flipped to
``1 - mean`` in mode ``M``); members within ``mu`` of the best competence
are kept and vote with their competence as weight.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .hyperbox import GABRYS, DimensionError, HyperboxSet, MembershipKind, fit_hyperboxes
from .linear import Pool


class ConfigurationError(ValueError):
    pass


class DesMode(enum.Enum):
    COMPETENCE = "C"
    INCOMPETENCE = "M"

    @classmethod
    def parse(cls, value) -> "DesMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


def select(delta, mu: float) -> np.ndarray:
    """Indices of members whose competence reaches ``mu * max(delta)``."""
    delta = np.asarray(delta, dtype=np.float64)
    tau = mu * delta.max()
    return np.flatnonzero(delta >= tau)


def weighted_vote(labels, weights, n_classes: int) -> int:
    """Index of the class with the largest summed weight; ties go to the lowest index.

    Weights are accumulated in the order given.
    """
    scores = np.bincount(labels, weights=weights, minlength=n_classes)
    return int(np.argmax(scores))


@dataclass(eq=False)
class DesModel:
    pool: Pool
    hsets: list[HyperboxSet]
    mode: DesMode
    mu: float
    kind: MembershipKind
    theta: float

    def __post_init__(self):
        if len(self.hsets) != len(self.pool):
            raise ConfigurationError("need exactly one hyperbox set per pool member")
        if not 0 <= self.mu <= 1:
            raise ConfigurationError(f"mu must lie in [0, 1], got {self.mu}")
        for h in self.hsets:
            if h.n != self.pool.n or h.theta != self.theta or h.kind != self.kind:
                raise ConfigurationError("hyperbox sets disagree with the model settings")
        self._pack()

    @classmethod
    def fit(cls, pool: Pool, dsel_X, dsel_y, mode=DesMode.INCOMPETENCE, theta: float = 0.27,
            kind: MembershipKind = MembershipKind(), mu: float = 0.99) -> "DesModel":
        """Build one hyperbox set per member from its correct or missed DSEL rows."""
        mode = DesMode.parse(mode)
        X = np.asarray(dsel_X, dtype=np.float64)
        y = np.asarray(dsel_y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ConfigurationError("DSEL is empty")
        if X.shape[0] != y.shape[0]:
            raise ConfigurationError("DSEL features and labels differ in length")
        if X.shape[1] != pool.n:
            raise DimensionError(f"DSEL has {X.shape[1]} features, pool expects {pool.n}")
        correct = pool.predict_all(X) == y[:, None]  # (N, M)
        keep = correct if mode is DesMode.COMPETENCE else ~correct
        hsets = [fit_hyperboxes(X[keep[:, i]], theta, kind, n=pool.n) for i in range(len(pool))]
        return cls(pool, hsets, mode, float(mu), kind, float(theta))

    def _pack(self):
        # all boxes back to back; member i owns rows bounds[i]:bounds[i+1]
        counts = np.array([len(h) for h in self.hsets], dtype=np.int64)
        n = self.pool.n
        self._counts = counts
        self._bounds = np.concatenate([[0], np.cumsum(counts)])
        # feature-major corners: (n, E)
        if counts.sum():
            self._VT = np.ascontiguousarray(np.concatenate([h.V for h in self.hsets]).T)
            self._WT = np.ascontiguousarray(np.concatenate([h.W for h in self.hsets]).T)
        else:
            self._VT = self._WT = np.empty((n, 0))
        self._buf = np.empty(max(int(counts.max(initial=0)), 1))
        self._kind_code = _kernels.KIND_GABRYS if self.kind.name == GABRYS else _kernels.KIND_SBM
        self._flip = self.mode is DesMode.INCOMPETENCE

    @property
    def n(self) -> int:
        return self.pool.n

    @property
    def box_counts(self) -> np.ndarray:
        return self._counts.copy()

    def _check(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} features, got {x.shape[-1]}")
        return x

    def competence(self, x) -> np.ndarray:
        """Competence of every member for a single query point.

        A member's two best box memberships are averaged; with one box it is
        used twice, with none the average is 0. Mode ``M`` reports ``1 - avg``.
        """
        x = self._check(x)
        out = np.empty(len(self.hsets))
        _kernels.competence(self._VT, self._WT, self._bounds, x, self._kind_code,
                            self.kind.gamma, self._flip, out, self._buf)
        return out

    def competence_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(self._check(X))
        out = np.empty((X.shape[0], len(self.hsets)))
        _kernels.competence_many(self._VT, self._WT, self._bounds, X, self._kind_code,
                                 self.kind.gamma, self._flip, out, self._buf)
        return out

    def aggregate(self, phi, delta, x) -> int:
        """Competence-weighted vote of the selected members; returns a label."""
        x = self._check(x)
        phi = np.asarray(phi)
        votes = self.pool.predict_index_one(x)[phi]
        return int(self.pool.classes[weighted_vote(votes, np.asarray(delta)[phi], len(self.pool.classes))])

    def predict_one(self, x) -> int:
        x = self._check(x)
        delta = self.competence(x)
        phi = select(delta, self.mu)
        votes = self.pool.predict_index_one(x)[phi]
        return int(self.pool.classes[weighted_vote(votes, delta[phi], len(self.pool.classes))])

    def predict(self, X) -> np.ndarray:
        """Labels for every row of ``X``; identical to ``predict_one`` row by row."""
        X = np.atleast_2d(self._check(X))
        delta = self.competence_batch(X)
        votes = self.pool.predict_index(X)
        tau = self.mu * delta.max(axis=1, keepdims=True)
        weight = np.where(delta >= tau, delta, 0.0)
        Q, M = delta.shape
        scores = np.zeros((Q, len(self.pool.classes)))
        rows = np.arange(Q)
        for i in range(M):
            # member order matches weighted_vote's accumulation order
            scores[rows, votes[:, i]] += weight[:, i]
        return self.pool.classes[np.argmax(scores, axis=1)]
