"""Binary model files.

Layout (all integers unsigned 32-bit unless noted, all floats 64-bit,
everything little-endian)::

    magic "FHDES" | version u8
    header:   mode u8 (0=C, 1=M) | mu | theta | kind u8 (0=gabrys, 1=sbm) | gamma | n | M
    pool:     M, then per member: L | n | classes (L x i64) | weights (L*n) | biases (L)
    hsets:    per member: box count, then per box: n | theta | kind u8 | gamma | v (n) | w (n)
    extras:   has_norm u8 [mins (n) | maxs (n)] | label count, then per label: len | utf-8 bytes
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import DesMode, DesModel
from .hyperbox import GABRYS, SBM, HyperboxSet, MembershipKind
from .linear import LinearClassifier, Pool

MAGIC = b"FHDES"
VERSION = 1

_KIND_CODES = {GABRYS: 0, SBM: 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_MODE_CODES = {DesMode.COMPETENCE: 0, DesMode.INCOMPETENCE: 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}


class ModelFormatError(ValueError):
    pass


@dataclass
class ModelFile:
    model: DesModel
    feature_mins: np.ndarray | None = None
    feature_maxs: np.ndarray | None = None
    label_names: tuple[str, ...] = ()


class _Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def pack(self, fmt: str, *values):
        self.buf.write(struct.pack("<" + fmt, *values))

    def floats(self, a):
        self.buf.write(np.asarray(a, dtype="<f8").tobytes())

    def ints(self, a):
        self.buf.write(np.asarray(a, dtype="<i8").tobytes())


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def _take(self, size: int) -> memoryview:
        if self.pos + size > len(self.data):
            raise ModelFormatError("model file is truncated")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self._take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self._take(8 * count), dtype="<f8").astype(np.float64)

    def ints(self, count: int) -> np.ndarray:
        return np.frombuffer(self._take(8 * count), dtype="<i8").astype(np.int64)


def dumps(model: DesModel, feature_mins=None, feature_maxs=None, label_names=()) -> bytes:
    w = _Writer()
    w.buf.write(MAGIC)
    w.pack("B", VERSION)
    pool, kind = model.pool, model.kind
    w.pack("BddBdII", _MODE_CODES[model.mode], model.mu, model.theta, _KIND_CODES[kind.name],
           kind.gamma, pool.n, len(pool))

    w.pack("I", len(pool))
    for c in pool.members:
        L, n = c.weights.shape
        w.pack("II", L, n)
        w.ints(c.classes)
        w.floats(c.weights)
        w.floats(c.biases)

    for h in model.hsets:
        w.pack("I", len(h))
        for v, u in zip(h.V, h.W):
            w.pack("IdBd", h.n, h.theta, _KIND_CODES[h.kind.name], h.kind.gamma)
            w.floats(v)
            w.floats(u)

    if feature_mins is None:
        w.pack("B", 0)
    else:
        w.pack("B", 1)
        w.floats(feature_mins)
        w.floats(feature_maxs)
    w.pack("I", len(label_names))
    for name in label_names:
        raw = str(name).encode("utf-8")
        w.pack("I", len(raw))
        w.buf.write(raw)
    return w.buf.getvalue()


def loads(data: bytes) -> ModelFile:
    r = _Reader(data)
    if bytes(r._take(len(MAGIC))) != MAGIC:
        raise ModelFormatError("not a model file (bad magic bytes)")
    (version,) = r.unpack("B")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model file version {version}")
    mode_code, mu, theta, kind_code, gamma, n, M = r.unpack("BddBdII")
    try:
        mode = _MODE_NAMES[mode_code]
        kind = MembershipKind(_KIND_NAMES[kind_code], gamma)
    except KeyError:
        raise ModelFormatError("corrupt model header") from None

    (pool_size,) = r.unpack("I")
    if pool_size != M:
        raise ModelFormatError("pool size disagrees with header")
    members = []
    for _ in range(M):
        L, n_member = r.unpack("II")
        classes = r.ints(L)
        weights = r.floats(L * n_member).reshape(L, n_member)
        biases = r.floats(L)
        members.append(LinearClassifier(weights, biases, classes))
    pool = Pool(members)

    hsets = []
    for _ in range(M):
        (count,) = r.unpack("I")
        V = np.empty((count, n))
        W = np.empty((count, n))
        for j in range(count):
            box_n, box_theta, box_kind, box_gamma = r.unpack("IdBd")
            if box_n != n or box_theta != theta or _KIND_NAMES.get(box_kind) != kind.name:
                raise ModelFormatError("hyperbox record disagrees with header")
            V[j] = r.floats(n)
            W[j] = r.floats(n)
        hsets.append(HyperboxSet(n, theta, kind, V, W))
    model = DesModel(pool, hsets, mode, mu, kind, theta)

    mins = maxs = None
    (has_norm,) = r.unpack("B")
    if has_norm:
        mins, maxs = r.floats(n), r.floats(n)
    (n_labels,) = r.unpack("I")
    labels = []
    for _ in range(n_labels):
        (size,) = r.unpack("I")
        labels.append(bytes(r._take(size)).decode("utf-8"))
    if r.pos != len(r.data):
        raise ModelFormatError("trailing bytes after model data")
    return ModelFile(model, mins, maxs, tuple(labels))


def save_model(path, model: DesModel, feature_mins=None, feature_maxs=None, label_names=()) -> None:
    Path(path).write_bytes(dumps(model, feature_mins, feature_maxs, label_names))


def load_model(path) -> ModelFile:
    return loads(Path(path).read_bytes())
