"""Numeric inner loops: numba-jitted kernels with pure-numpy fallbacks.

The active implementation is chosen once at import time from the
``REWRITEDETECT_KERNEL`` environment variable (``numba`` or ``numpy``).
When unset, numba is used if importable, numpy otherwise.  Both paths
produce identical integer DP tables and op matrices; the gradient-descent
kernels may differ in float rounding only.

``benchmarks/bench_kernels.py`` compares the two paths head to head.
"""

from __future__ import annotations

import os

import numpy as np

KERNEL_ENV = "REWRITEDETECT_KERNEL"

# Edit-op codes shared by the DP fill and the traceback in textdist.
OP_KEEP = 0
OP_SUB = 1
OP_DEL = 2
OP_INS = 3

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None


# ---------------------------------------------------------------------------
# pure-numpy implementations
#
# The insertion recurrence cur[j] = min(base[j], cur[j-1] + 1) is a prefix
# minimum in disguise: cur[j] = j + cummin(base[k] - k), which vectorizes.
# ---------------------------------------------------------------------------

def _levenshtein_np(a: np.ndarray, b: np.ndarray) -> int:
    n = a.shape[0]
    m = b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    idx = np.arange(m + 1, dtype=np.int32)
    prev = idx.copy()
    c = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        sub = prev[:-1] + (a[i - 1] != b)
        dele = prev[1:] + 1
        c[0] = i
        np.minimum(sub, dele, out=c[1:])
        prev = idx + np.minimum.accumulate(c - idx)
    return int(prev[m])


def _edit_ops_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    m = b.shape[0]
    ops = np.empty((n + 1, m + 1), dtype=np.uint8)
    ops[0, 0] = OP_KEEP
    ops[0, 1:] = OP_INS
    ops[1:, 0] = OP_DEL
    idx = np.arange(m + 1, dtype=np.int32)
    prev = idx.copy()
    c = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        eq = a[i - 1] == b
        sub = prev[:-1] + (~eq)
        dele = prev[1:] + 1
        c[0] = i
        np.minimum(sub, dele, out=c[1:])
        cur = idx + np.minimum.accumulate(c - idx)
        # tie-break preference: keep, then delete, insert, substitute
        ops[i, 1:] = np.select(
            [eq, cur[1:] == dele, cur[1:] == cur[:-1] + 1],
            [OP_KEEP, OP_DEL, OP_INS],
            OP_SUB,
        )
        prev = cur
    return ops


def _logistic_gd_np(
    scores: np.ndarray,
    labels: np.ndarray,
    learning_rate: float,
    max_iters: int,
    tol: float,
    loss_floor: float,
) -> tuple[float, float, int]:
    n = scores.shape[0]
    w = 0.0
    b = 0.0
    iters = 0
    for it in range(max_iters):
        z = w * scores + b
        p = np.where(z >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                     np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
        r = p - labels
        gw = float(r @ scores) / n
        gb = float(np.sum(r)) / n
        w -= learning_rate * gw
        b -= learning_rate * gb
        iters = it + 1
        if abs(gw) < tol and abs(gb) < tol:
            break
        if (it & 63) == 63:
            z = w * scores + b
            if np.all((z >= 0.0) == (labels == 1.0)):
                loss = float(np.mean(np.logaddexp(0.0, z) - labels * z))
                if loss < loss_floor:
                    break
    return w, b, iters


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if njit is not None:

    @njit(cache=True)
    def _levenshtein_nb(a, b):  # pragma: no cover - jitted
        n = a.shape[0]
        m = b.shape[0]
        if n == 0:
            return m
        if m == 0:
            return n
        prev = np.arange(m + 1, dtype=np.int32)
        cur = np.empty(m + 1, dtype=np.int32)
        for i in range(1, n + 1):
            cur[0] = i
            ai = a[i - 1]
            for j in range(1, m + 1):
                d = prev[j - 1]
                if ai != b[j - 1]:
                    d += 1
                e = prev[j] + 1
                if e < d:
                    d = e
                e = cur[j - 1] + 1
                if e < d:
                    d = e
                cur[j] = d
            prev, cur = cur, prev
        return int(prev[m])

    @njit(cache=True)
    def _edit_ops_nb(a, b):  # pragma: no cover - jitted
        n = a.shape[0]
        m = b.shape[0]
        ops = np.empty((n + 1, m + 1), dtype=np.uint8)
        ops[0, 0] = OP_KEEP
        for j in range(1, m + 1):
            ops[0, j] = OP_INS
        prev = np.arange(m + 1, dtype=np.int32)
        cur = np.empty(m + 1, dtype=np.int32)
        for i in range(1, n + 1):
            cur[0] = i
            ops[i, 0] = OP_DEL
            ai = a[i - 1]
            for j in range(1, m + 1):
                if ai == b[j - 1]:
                    cur[j] = prev[j - 1]
                    ops[i, j] = OP_KEEP
                else:
                    best = prev[j] + 1
                    op = OP_DEL
                    e = cur[j - 1] + 1
                    if e < best:
                        best = e
                        op = OP_INS
                    e = prev[j - 1] + 1
                    if e < best:
                        best = e
                        op = OP_SUB
                    cur[j] = best
                    ops[i, j] = op
            prev, cur = cur, prev
        return ops

    @njit(cache=True)
    def _logistic_gd_nb(scores, labels, learning_rate, max_iters, tol, loss_floor):  # pragma: no cover - jitted
        n = scores.shape[0]
        w = 0.0
        b = 0.0
        iters = 0
        for it in range(max_iters):
            gw = 0.0
            gb = 0.0
            for k in range(n):
                z = w * scores[k] + b
                if z >= 0.0:
                    p = 1.0 / (1.0 + np.exp(-z))
                else:
                    ez = np.exp(z)
                    p = ez / (1.0 + ez)
                r = p - labels[k]
                gw += r * scores[k]
                gb += r
            gw /= n
            gb /= n
            w -= learning_rate * gw
            b -= learning_rate * gb
            iters = it + 1
            if abs(gw) < tol and abs(gb) < tol:
                break
            if (it & 63) == 63:
                separated = True
                loss = 0.0
                for k in range(n):
                    z = w * scores[k] + b
                    if (z >= 0.0) != (labels[k] == 1.0):
                        separated = False
                        break
                    if z > 0.0:
                        loss += z + np.log1p(np.exp(-z)) - labels[k] * z
                    else:
                        loss += np.log1p(np.exp(z)) - labels[k] * z
                if separated and loss / n < loss_floor:
                    break
        return w, b, iters

    _IMPLS = {
        "numpy": (_levenshtein_np, _edit_ops_np, _logistic_gd_np),
        "numba": (_levenshtein_nb, _edit_ops_nb, _logistic_gd_nb),
    }
else:  # pragma: no cover
    _IMPLS = {"numpy": (_levenshtein_np, _edit_ops_np, _logistic_gd_np)}


def _select_kernel() -> str:
    choice = os.environ.get(KERNEL_ENV, "").strip().lower()
    if not choice:
        return "numba" if "numba" in _IMPLS else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(f"{KERNEL_ENV} must be 'numba' or 'numpy', got {choice!r}")
    if choice not in _IMPLS:
        raise RuntimeError(f"{KERNEL_ENV}={choice} requested but numba is not importable")
    return choice


ACTIVE_KERNEL = _select_kernel()
levenshtein_codes, edit_ops, logistic_gd = _IMPLS[ACTIVE_KERNEL]
