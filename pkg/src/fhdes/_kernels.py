"""Compiled inner loops for hyperbox fitting and competence evaluation.

Arithmetic mirrors ``hyperbox.memberships`` operation for operation (no
fastmath), so results are bitwise identical to the numpy reference.
"""
import numba
import numpy as np

KIND_GABRYS = 0
KIND_SBM = 1


@numba.njit(cache=True)
def competence(VT, WT, bounds, x, kind, gamma, flip, out, buf):
    """Mean of the two best memberships per member, written to ``out``.

    Corners are feature-major ``(n, E)``; member i owns columns
    ``bounds[i]:bounds[i+1]``. The inner loops run over boxes so they
    vectorise. For SBM the two smallest raw distances give the two largest
    memberships, since ``max(1 - raw, 0)`` is monotone. ``flip`` reports
    ``1 - mean`` instead. ``buf`` is scratch space of at least the largest
    per-member box count.
    """
    n = x.shape[0]
    for i in range(bounds.shape[0] - 1):
        lo, hi = bounds[i], bounds[i + 1]
        cnt = hi - lo
        if cnt == 0:
            delta = 0.0
        elif kind == KIND_SBM:
            for j in range(cnt):
                buf[j] = 0.0
            for d in range(n):
                xd = x[d]
                v = VT[d, lo:hi]
                w = WT[d, lo:hi]
                for j in range(cnt):
                    g = max(v[j] - xd, xd - w[j])
                    g = max(g, 0.0)
                    buf[j] += g * g
            r1 = np.inf
            r2 = np.inf
            for j in range(cnt):
                r = buf[j]
                if r < r2:
                    if r < r1:
                        r2 = r1
                        r1 = r
                    else:
                        r2 = r
            best = max(1.0 - r1, 0.0)
            second = best if cnt == 1 else max(1.0 - r2, 0.0)
            delta = (best + second) / 2
        else:
            for j in range(cnt):
                buf[j] = 1.0
            for d in range(n):
                xd = x[d]
                v = VT[d, lo:hi]
                w = WT[d, lo:hi]
                for j in range(cnt):
                    above = min(max((xd - w[j]) * gamma, 0.0), 1.0)
                    below = min(max((v[j] - xd) * gamma, 0.0), 1.0)
                    buf[j] = min(buf[j], min(1.0 - above, 1.0 - below))
            best = -1.0
            second = -1.0
            for j in range(cnt):
                m = buf[j]
                if m > second:
                    if m > best:
                        second = best
                        best = m
                    else:
                        second = m
            if cnt == 1:
                second = best
            delta = (best + second) / 2
        out[i] = 1.0 - delta if flip else delta


@numba.njit(cache=True)
def competence_many(VT, WT, bounds, X, kind, gamma, flip, out, buf):
    for q in range(X.shape[0]):
        competence(VT, WT, bounds, X[q], kind, gamma, flip, out[q], buf)


@numba.njit(cache=True)
def fit_boxes(X, theta):
    """Single-pass expansion; returns corner arrays with one row per box."""
    N, n = X.shape
    V = np.empty((max(N, 1), n))
    W = np.empty((max(N, 1), n))
    count = 0
    for s in range(N):
        target = -1
        covered = False
        for j in range(count):
            inside = True
            fits = True
            for d in range(n):
                lo = min(V[j, d], X[s, d])
                hi = max(W[j, d], X[s, d])
                if lo != V[j, d] or hi != W[j, d]:
                    inside = False
                if hi - lo > theta:
                    fits = False
                    break
            if fits and inside:
                covered = True
                break
            if fits and target < 0:
                target = j
        if covered:
            continue
        if target >= 0:
            for d in range(n):
                V[target, d] = min(V[target, d], X[s, d])
                W[target, d] = max(W[target, d], X[s, d])
        else:
            V[count] = X[s]
            W[count] = X[s]
            count += 1
    return V[:count].copy(), W[:count].copy()
