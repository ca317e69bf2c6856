"""Ranking consistency: stability of metric rankings across random input halves."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._rng import check_seed, derived_rng, pmap
from .coef import kendall_rows
from .data import MetaEvalDataset
from .measures import Measure, UndefinedMeasureError, measure_values

# iterations evaluated together; each still has its own derived stream
BATCH = 50


@dataclass(frozen=True)
class RCConfig:
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        check_seed(self.seed)


@dataclass
class RCReport:
    measure: Measure
    rc_value: float
    per_iteration_taus: np.ndarray  # NaN for skipped iterations
    undefined_iterations: int

    @property
    def iterations(self) -> int:
        return len(self.per_iteration_taus)


def split_halves(M: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniformly random split of range(M) into sorted halves of size M//2 and M - M//2."""
    if M < 2:
        raise ValueError(f"need at least 2 inputs to split, got {M}")
    perm = rng.permutation(M)
    m1 = M // 2
    return np.sort(perm[:m1]), np.sort(perm[m1:])


def _iteration_taus(X, Z, measure, seed, iters):
    """Half-split taus for the given iteration indices, NaN where skipped."""
    M = Z.shape[1]
    splits = [split_halves(M, derived_rng(seed, t)) for t in iters]
    d1 = np.stack([s[0] for s in splits])  # (B, M1)
    d2 = np.stack([s[1] for s in splits])
    # (K, N, B, Mh) -> (B, K, N, Mh)
    x1 = np.moveaxis(X[:, :, d1], 2, 0)
    x2 = np.moveaxis(X[:, :, d2], 2, 0)
    z1 = np.moveaxis(Z[:, d1], 1, 0)[:, None]
    z2 = np.moveaxis(Z[:, d2], 1, 0)[:, None]
    r1, _ = measure_values(measure, x1, z1)  # (B, K)
    r2, _ = measure_values(measure, x2, z2)
    taus = kendall_rows(r1, r2)
    bad = np.isnan(r1).any(axis=1) | np.isnan(r2).any(axis=1)
    taus[bad] = np.nan
    return taus


def ranking_consistency(
    dataset: MetaEvalDataset, measure: Measure, cfg: RCConfig, workers: int = 1
) -> RCReport:
    """Mean Kendall tau-b between metric rankings computed on two random input halves.

    Iteration t splits the inputs with a stream derived from (seed, t).
    Iterations where a half-measure is undefined for some metric, or where
    tau-b is degenerate, are skipped and counted.
    """
    if dataset.K < 2:
        raise ValueError("ranking consistency needs at least 2 metrics")
    X = dataset.metric_stack()
    Z = dataset.human.values
    T = int(cfg.iterations)
    batches = [range(s, min(s + BATCH, T)) for s in range(0, T, BATCH)]
    parts = pmap(lambda it: _iteration_taus(X, Z, measure, cfg.seed, it), batches, workers)
    taus = np.concatenate(parts)
    ok = ~np.isnan(taus)
    n_undef = int(T - ok.sum())
    if not ok.any():
        raise UndefinedMeasureError(
            f"{measure.token}: all {T} ranking-consistency iterations were undefined"
        )
    rc_value = math.fsum(taus[ok]) / int(ok.sum())
    return RCReport(measure, rc_value, taus, n_undef)


def write_taus(report: RCReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "tau"])
        for t, tau in enumerate(report.per_iteration_taus):
            w.writerow([t, "" if np.isnan(tau) else repr(float(tau))])
