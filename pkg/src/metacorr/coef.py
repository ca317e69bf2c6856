"""Pearson, Spearman and Kendall tau-b with explicit tie and degeneracy handling.

Two layers live here. The scalar functions (:func:`pearson`, :func:`spearman`,
:func:`kendall_tau_b`) take two vectors and return a :class:`CoefResult`.
The ``*_rows`` kernels work on stacks of vectors along the last axis and mark
undefined coefficients with NaN; the measure and simulation code use those.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class CoefKind(enum.Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"
    KENDALL = "kendall"

    @property
    def token(self) -> str:
        return self.value


CONSTANT_X = "constant-x"
CONSTANT_Y = "constant-y"
TOO_SHORT = "too-short"


@dataclass(frozen=True)
class CoefResult:
    value: float | None = None
    reason: str | None = None

    def __post_init__(self):
        if (self.value is None) == (self.reason is None):
            raise ValueError("CoefResult needs exactly one of value or reason")

    @property
    def defined(self) -> bool:
        return self.value is not None

    @classmethod
    def undefined(cls, reason: str) -> "CoefResult":
        return cls(None, reason)


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("expected 1-D vectors")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError(f"need at least 2 paired values, got {x.size}")
    return x, y


def _wrap(x, y, value) -> CoefResult:
    if np.ptp(x) == 0:
        return CoefResult.undefined(CONSTANT_X)
    if np.ptp(y) == 0:
        return CoefResult.undefined(CONSTANT_Y)
    return CoefResult(float(value))


def pearson(x, y) -> CoefResult:
    x, y = _as_pair(x, y)
    return _wrap(x, y, pearson_rows(x, y))


def spearman(x, y) -> CoefResult:
    """Pearson correlation of the fractional (average-tie) ranks."""
    x, y = _as_pair(x, y)
    return _wrap(x, y, spearman_rows(x, y))


def kendall_tau_b(x, y) -> CoefResult:
    x, y = _as_pair(x, y)
    return _wrap(x, y, kendall_rows(x, y))


def fractional_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they occupy."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("expected a non-empty 1-D vector")
    return average_ranks_rows(x)


# -- batched kernels -------------------------------------------------------


def _flatten_pair(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    lead = x.shape[:-1]
    n = x.shape[-1]
    return x.reshape(-1, n), y.reshape(-1, n), lead


def _constant(a):
    return a.max(axis=-1) == a.min(axis=-1)


def pearson_rows(x, y) -> np.ndarray:
    """Row-wise Pearson r along the last axis; NaN where either row is constant."""
    x2, y2, lead = _flatten_pair(x, y)
    out = _pearson2(x2, y2)
    return out.reshape(lead) if lead else out[0]


def _pearson2(x, y):
    bad = _constant(x) | _constant(y)
    xc = x - x.mean(axis=-1, keepdims=True)
    yc = y - y.mean(axis=-1, keepdims=True)
    num = np.sum(xc * yc, axis=-1)
    # sqrt of the product keeps r(x, x) exactly 1
    den = np.sqrt(np.sum(xc * xc, axis=-1) * np.sum(yc * yc, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.clip(num / den, -1.0, 1.0)
    r[bad] = np.nan
    return r


def average_ranks_rows(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    lead = a.shape[:-1]
    n = a.shape[-1]
    a2 = a.reshape(-1, n)
    order = np.argsort(a2, axis=-1, kind="stable")
    s = np.take_along_axis(a2, order, axis=-1)
    idx = np.arange(n)
    first = np.ones(s.shape, dtype=bool)
    first[:, 1:] = s[:, 1:] != s[:, :-1]
    last = np.ones(s.shape, dtype=bool)
    last[:, :-1] = first[:, 1:]
    start = np.maximum.accumulate(np.where(first, idx, 0), axis=-1)
    end = np.minimum.accumulate(np.where(last, idx, n - 1)[:, ::-1], axis=-1)[:, ::-1]
    ranks = np.empty_like(s)
    np.put_along_axis(ranks, order, (start + end) / 2.0 + 1.0, axis=-1)
    return ranks.reshape(a.shape)


def spearman_rows(x, y) -> np.ndarray:
    x2, y2, lead = _flatten_pair(x, y)
    out = _pearson2(average_ranks_rows(x2), average_ranks_rows(y2))
    out[_constant(x2) | _constant(y2)] = np.nan
    return out.reshape(lead) if lead else out[0]


def _dense_ranks(a):
    """0-based dense ranks per row and the number of distinct values per row."""
    order = np.argsort(a, axis=-1, kind="stable")
    s = np.take_along_axis(a, order, axis=-1)
    new = np.ones(s.shape, dtype=bool)
    new[:, 1:] = s[:, 1:] != s[:, :-1]
    dense_sorted = np.cumsum(new, axis=-1, dtype=np.int64) - 1
    ranks = np.empty_like(dense_sorted)
    np.put_along_axis(ranks, order, dense_sorted, axis=-1)
    return ranks, dense_sorted[:, -1] + 1


def _tied_pairs(keys):
    """Per row, the number of unordered pairs with equal keys."""
    s = np.sort(keys, axis=-1)
    idx = np.arange(s.shape[-1])
    new = np.ones(s.shape, dtype=bool)
    new[:, 1:] = s[:, 1:] != s[:, :-1]
    start = np.maximum.accumulate(np.where(new, idx, 0), axis=-1)
    return np.sum(idx - start, axis=-1, dtype=np.int64)


def _inversions(y):
    """Per row, count pairs i < j with y[i] > y[j]. ``y`` holds ints in [0, n).

    Bottom-up merge sort where each level's cross-block counts come from one
    global searchsorted over block-prefixed keys.
    """
    B, n = y.shape
    total = np.zeros(B, dtype=np.int64)
    cur = y.astype(np.int64, copy=True)
    idx = np.arange(n)
    row = np.arange(B, dtype=np.int64)[:, None]
    width = 1
    while width < n:
        nblk = -(-n // (2 * width))
        group = row * nblk + (idx // (2 * width))[None, :]
        right = (idx // width) % 2 == 1
        key = group * n + cur
        left_keys = key[:, ~right].ravel()
        rk = key[:, right]
        hi = np.searchsorted(left_keys, (group[:, right] + 1) * n, side="left")
        le = np.searchsorted(left_keys, rk, side="right")
        total += np.sum(hi - le, axis=-1)
        key.sort(axis=-1)
        cur = key - group * n
        width *= 2
    return total


def _kendall_by_table(rx, ry, lx, ly):
    """C - D and tie-pair counts from per-row contingency tables of dense ranks."""
    B = rx.shape[0]
    flat = (np.arange(B, dtype=np.int64)[:, None] * (lx * ly) + rx * ly + ry).ravel()
    t = np.bincount(flat, minlength=B * lx * ly).reshape(B, lx, ly)
    ge = np.cumsum(t[:, ::-1, :], axis=1)[:, ::-1, :]
    gt = np.zeros_like(ge)
    gt[:, :-1, :] = ge[:, 1:, :]
    cum = np.cumsum(gt, axis=2)
    below = cum - gt
    above = cum[:, :, -1:] - cum
    s = np.sum(t * (above - below), axis=(1, 2))
    rows = t.sum(axis=2)
    cols = t.sum(axis=1)
    n1 = np.sum(rows * (rows - 1) // 2, axis=-1)
    n2 = np.sum(cols * (cols - 1) // 2, axis=-1)
    return s, n1, n2


def kendall_rows(x, y) -> np.ndarray:
    """Row-wise Kendall tau-b along the last axis; NaN where a denominator factor is zero.

    Exact integer pair counting in O(n log^2 n) per row; rows with few distinct
    values go through contingency tables instead.
    """
    x2, y2, lead = _flatten_pair(x, y)
    B, n = x2.shape
    rx, lx = _dense_ranks(x2)
    ry, ly = _dense_ranks(y2)
    n0 = n * (n - 1) // 2
    Lx, Ly = int(lx.max()), int(ly.max())
    if Lx * Ly <= 16 * n and B * Lx * Ly <= 1 << 24:
        s, n1, n2 = _kendall_by_table(rx, ry, Lx, Ly)
    else:
        n1 = _tied_pairs(rx)
        n2 = _tied_pairs(ry)
        joint = rx * n + ry
        n3 = _tied_pairs(joint)
        order = np.argsort(joint, axis=-1)
        d = _inversions(np.take_along_axis(ry, order, axis=-1))
        s = n0 - n1 - n2 + n3 - 2 * d
    dx = (n0 - n1).astype(np.float64)
    dy = (n0 - n2).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.clip(s / np.sqrt(dx * dy), -1.0, 1.0)
    tau[(dx == 0) | (dy == 0)] = np.nan
    return tau.reshape(lead) if lead else tau[0]


_ROWS = {
    CoefKind.PEARSON: pearson_rows,
    CoefKind.SPEARMAN: spearman_rows,
    CoefKind.KENDALL: kendall_rows,
}

_SCALAR = {
    CoefKind.PEARSON: pearson,
    CoefKind.SPEARMAN: spearman,
    CoefKind.KENDALL: kendall_tau_b,
}


def coefficient(kind: CoefKind, x, y) -> CoefResult:
    return _SCALAR[kind](x, y)


def coefficient_rows(kind: CoefKind, x, y) -> np.ndarray:
    if np.shape(x)[-1] < 2:
        raise ValueError("need at least 2 paired values per row")
    return _ROWS[kind](x, y)
