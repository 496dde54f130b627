"""Fuzzy hyperboxes: geometry, membership functions and single-pass expansion.

A hyperbox lives in the unit hypercube and is described by its min corner
``v`` and max corner ``w``. Two membership functions are provided:

* ``gabrys`` -- the classic min-of-ramps function with sensitivity ``gamma``.
* ``sbm`` -- smooth-border membership. Its raw value is the squared
  Euclidean distance from the point to the box; membership is
  ``max(0, 1 - raw)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

GABRYS = "gabrys"
SBM = "sbm"


class DimensionError(ValueError):
    """Raised when a point and a box (or box set) disagree on dimensionality."""


def _as_point(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise DimensionError(f"expected a point of dimension {n}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class MembershipKind:
    """Which membership function to use, plus its sensitivity for Gabrys."""

    name: str = SBM
    gamma: float = 1.0

    def __post_init__(self):
        if self.name not in (GABRYS, SBM):
            raise ValueError(f"unknown membership kind {self.name!r}")
        if self.name == GABRYS and not self.gamma > 0:
            raise ValueError("gamma must be positive for the Gabrys membership")

    @classmethod
    def gabrys(cls, gamma: float = 1.0) -> "MembershipKind":
        return cls(GABRYS, float(gamma))

    @classmethod
    def sbm(cls) -> "MembershipKind":
        return cls(SBM, 1.0)

    @classmethod
    def parse(cls, name: str, gamma: float = 1.0) -> "MembershipKind":
        name = name.lower()
        return cls.gabrys(gamma) if name == GABRYS else cls(name, float(gamma))


@dataclass(frozen=True, eq=False)
class Hyperbox:
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64)
        w = np.array(self.w, dtype=np.float64)
        if v.ndim != 1 or v.shape != w.shape or v.size < 1:
            raise DimensionError("min and max corners must be 1-D vectors of equal length")
        if np.any(v > w):
            raise ValueError("min corner exceeds max corner")
        if np.any(v < 0) or np.any(w > 1):
            raise ValueError("hyperbox must lie inside the unit hypercube")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def center(self) -> np.ndarray:
        return (self.v + self.w) / 2

    def __eq__(self, other):
        if not isinstance(other, Hyperbox):
            return NotImplemented
        return np.array_equal(self.v, other.v) and np.array_equal(self.w, other.w)

    def __repr__(self):
        return f"Hyperbox(v={self.v.tolist()}, w={self.w.tolist()})"


def contains(b: Hyperbox, x) -> bool:
    """Closed-box test: boundary points count as inside."""
    x = _as_point(x, b.n)
    return bool(np.all((b.v <= x) & (x <= b.w)))


def can_expand(b: Hyperbox, x, theta: float) -> bool:
    """True if growing ``b`` to cover ``x`` keeps every side within ``theta``."""
    x = _as_point(x, b.n)
    extent = np.maximum(b.w, x) - np.minimum(b.v, x)
    return bool(np.all(extent <= theta))


def expand(b: Hyperbox, x) -> Hyperbox:
    x = _as_point(x, b.n)
    return Hyperbox(np.minimum(b.v, x), np.maximum(b.w, x))


def gabrys_membership(V: np.ndarray, W: np.ndarray, x: np.ndarray, gamma: float,
                      axis: int = -1) -> np.ndarray:
    """Gabrys-Bargiela membership of ``x`` in each box.

    ``axis`` is the feature axis of the broadcast ``V``/``W``/``x`` arrays.
    """
    above = np.clip((x - W) * gamma, 0.0, 1.0)
    below = np.clip((V - x) * gamma, 0.0, 1.0)
    return np.minimum(1.0 - above, 1.0 - below).min(axis=axis)


def sbm_raw(V: np.ndarray, W: np.ndarray, x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Squared distance from ``x`` to each box.

    ``ReLU(|o - x| - (w - v)/2)`` equals ``max(v - x, x - w, 0)`` per axis; the
    second form is used because it is exactly zero for points inside.
    """
    gap = np.subtract(V, x)
    np.maximum(gap, np.subtract(x, W), out=gap)
    np.maximum(gap, 0.0, out=gap)
    np.multiply(gap, gap, out=gap)
    return gap.sum(axis=axis)


def memberships(V: np.ndarray, W: np.ndarray, x: np.ndarray, kind: MembershipKind,
                axis: int = -1) -> np.ndarray:
    """Vectorised membership of ``x`` against many boxes (features along ``axis``)."""
    if kind.name == GABRYS:
        return gabrys_membership(V, W, x, kind.gamma, axis)
    m = np.subtract(1.0, sbm_raw(V, W, x, axis))
    return np.maximum(m, 0.0, out=m)


def membership(b: Hyperbox, x, kind: MembershipKind) -> float:
    x = _as_point(x, b.n)
    return float(memberships(b.v[None, :], b.w[None, :], x, kind)[0])


class HyperboxSet:
    """An ordered collection of hyperboxes sharing dimensionality and ``theta``.

    Corners are stored as two ``(count, n)`` arrays so membership can be
    evaluated against all boxes at once.
    """

    def __init__(self, n: int, theta: float, kind: MembershipKind = MembershipKind(),
                 V: np.ndarray | None = None, W: np.ndarray | None = None):
        if n < 1:
            raise ValueError("dimensionality must be at least 1")
        if not 0 < theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {theta}")
        self.n = int(n)
        self.theta = float(theta)
        self.kind = kind
        if V is None:
            V = np.empty((0, n))
            W = np.empty((0, n))
        self.V = np.ascontiguousarray(V, dtype=np.float64).reshape(-1, n)
        self.W = np.ascontiguousarray(W, dtype=np.float64).reshape(-1, n)
        if self.V.shape != self.W.shape:
            raise DimensionError("corner arrays differ in shape")

    def __len__(self) -> int:
        return self.V.shape[0]

    @property
    def boxes(self) -> list[Hyperbox]:
        return [Hyperbox(v, w) for v, w in zip(self.V, self.W)]

    def memberships(self, x) -> np.ndarray:
        x = _as_point(x, self.n)
        return memberships(self.V, self.W, x, self.kind)

    def __eq__(self, other):
        if not isinstance(other, HyperboxSet):
            return NotImplemented
        return (self.n == other.n and self.theta == other.theta and self.kind == other.kind
                and np.array_equal(self.V, other.V) and np.array_equal(self.W, other.W))

    def __repr__(self):
        return f"HyperboxSet(n={self.n}, theta={self.theta}, kind={self.kind}, boxes={len(self)})"


def fit_hyperboxes(samples: Iterable[Sequence[float]] | np.ndarray, theta: float,
                   kind: MembershipKind = MembershipKind(), n: int | None = None) -> HyperboxSet:
    """Cover ``samples`` with hyperboxes in one pass, in the given order.

    Each sample is absorbed by the first box that already contains it, else
    by the first box that can grow to include it without any side exceeding
    ``theta``; otherwise it seeds a new point box. No contraction is done, so
    boxes may overlap.

    ``n`` is only needed when ``samples`` is empty and the dimensionality
    cannot be inferred.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.size == 0:
        if n is None:
            n = X.shape[1] if X.ndim == 2 else 1
        return HyperboxSet(n, theta, kind)
    if X.ndim != 2:
        raise DimensionError("samples must be a 2-D array")
    dim = X.shape[1]
    if n is not None and n != dim:
        raise DimensionError(f"samples have dimension {dim}, expected {n}")
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")

    V, W = _kernels.fit_boxes(np.ascontiguousarray(X), float(theta))
    return HyperboxSet(dim, theta, kind, V, W)


def top2_membership(s: HyperboxSet, x) -> tuple[float, float]:
    """The two largest memberships of ``x`` over the set.

    A single box supplies both values; an empty set yields ``(0, 0)``.
    """
    m = s.memberships(x)
    if m.size == 0:
        return 0.0, 0.0
    if m.size == 1:
        return float(m[0]), float(m[0])
    top = np.partition(m, m.size - 2)[-2:]
    return float(top[1]), float(top[0])
