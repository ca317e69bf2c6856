"""Perm-Both paired permutation test on the difference of two metrics' correlations."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._rng import check_seed, derived_rng, pmap
from .data import MetaEvalDataset, ScoreMatrix
from .measures import Measure, UndefinedMeasureError, measure_values

# permutations drawn per batch; fixed so the random stream never depends on workers
CHUNK = 250


@dataclass(frozen=True)
class PermTestConfig:
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        check_seed(self.seed)


@dataclass(frozen=True)
class PermTestResult:
    delta: float
    p_value: float
    exceed_count: int
    iterations: int

    @property
    def degenerate(self) -> bool:
        """delta == 0: strict inequality then forces p = 0, which is not significance."""
        return self.delta == 0.0


def _values(m):
    return m.values if isinstance(m, ScoreMatrix) else np.asarray(m, dtype=np.float64)


def perm_both(x, y, z, measure: Measure, cfg: PermTestConfig, rng=None) -> PermTestResult:
    """Two-sided p-value for C(x, z) - C(y, z) by cell-wise random swapping.

    Each of ``cfg.iterations`` permutations swaps every cell (i, j) between
    x and y with probability 1/2; p is the fraction with |delta_s| > |delta|.
    The swap mask is applied to the pair, so exchanging x and y leaves p
    unchanged. ``rng`` overrides the stream seeded from ``cfg.seed``.
    """
    xv, yv, zv = _values(x), _values(y), _values(z)
    if not (xv.shape == yv.shape == zv.shape) or xv.ndim != 2:
        raise ValueError(f"shape mismatch: {xv.shape}, {yv.shape}, {zv.shape}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    base, _ = measure_values(measure, np.stack([xv, yv]), zv)
    if np.isnan(base).any():
        raise UndefinedMeasureError(f"{measure.token} undefined on the original pairing")
    delta = float(base[0] - base[1])
    T = int(cfg.iterations)
    exceed = 0
    done = 0
    while done < T:
        c = min(CHUNK, T - done)
        swap = rng.random((c,) + xv.shape) < 0.5
        xs = np.where(swap, yv, xv)
        ys = np.where(swap, xv, yv)
        cx, _ = measure_values(measure, xs, zv)
        cy, _ = measure_values(measure, ys, zv)
        bad = np.isnan(cx) | np.isnan(cy)
        if bad.any():
            t = done + int(np.argmax(bad))
            raise UndefinedMeasureError(
                f"{measure.token} undefined on permutation iteration {t}"
            )
        exceed += int(np.count_nonzero(np.abs(cx - cy) > abs(delta)))
        done += c
    return PermTestResult(delta, exceed / T, exceed, T)


@dataclass
class PValueMatrix:
    names: list[str]
    pvalues: np.ndarray  # K x K, symmetric, NaN on the diagonal
    results: dict  # (i, j) with i < j -> PermTestResult

    def upper(self) -> np.ndarray:
        i, j = np.triu_indices(len(self.names), k=1)
        return self.pvalues[i, j]

    @property
    def degenerate_pairs(self) -> list[tuple[str, str]]:
        return [
            (self.names[i], self.names[j])
            for (i, j), res in sorted(self.results.items())
            if res.degenerate
        ]


def pair_rng(seed: int, i: int, j: int) -> np.random.Generator:
    """Stream for metric pair (i, j), i < j, 0-based dataset positions."""
    if i > j:
        i, j = j, i
    return derived_rng(seed, i, j)


def pairwise_pvalues(
    dataset: MetaEvalDataset, measure: Measure, cfg: PermTestConfig, workers: int = 1
) -> PValueMatrix:
    K = dataset.K
    if K < 2:
        raise ValueError("pairwise tests need at least 2 metrics")
    names = dataset.metric_names
    z = dataset.human.values
    pairs = [(i, j) for i in range(K - 1) for j in range(i + 1, K)]

    def run(pair):
        i, j = pair
        try:
            return perm_both(
                dataset.metrics[i][1], dataset.metrics[j][1], z, measure, cfg,
                rng=pair_rng(cfg.seed, i, j),
            )
        except UndefinedMeasureError as exc:
            raise UndefinedMeasureError(f"pair ({names[i]!r}, {names[j]!r}): {exc}") from None

    results = dict(zip(pairs, pmap(run, pairs, workers)))
    p = np.full((K, K), np.nan)
    for (i, j), res in results.items():
        p[i, j] = p[j, i] = res.p_value
    return PValueMatrix(names, p, results)


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_pvalue_matrix(pm: PValueMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["", *pm.names])
        for name, row in zip(pm.names, pm.pvalues):
            w.writerow([name, *(_fmt(v) for v in row)])


def read_pvalue_matrix(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    p = np.array([[float(c) if c else np.nan for c in r[1:]] for r in rows[1:]])
    return names, p
