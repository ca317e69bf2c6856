"""Agreement between the metric rankings induced by different measures."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._rng import pmap
from .coef import kendall_tau_b
from .data import MetaEvalDataset
from .measures import ALL_MEASURES, Measure, UndefinedMeasureError, measure_vector


class DegenerateAgreementError(ArithmeticError):
    pass


@dataclass
class AgreementMatrix:
    measures: list[Measure]
    taus: np.ndarray  # NaN marks an unset cell

    @property
    def tokens(self) -> list[str]:
        return [m.token for m in self.measures]


def _vector(dataset, measure):
    v = measure_vector(dataset, measure)
    if np.isnan(v).any():
        bad = [n for n, x in zip(dataset.metric_names, v) if np.isnan(x)]
        raise UndefinedMeasureError(f"{measure.token} undefined for metrics {bad}")
    return v


def _tau(a, b, what):
    res = kendall_tau_b(a, b)
    if not res.defined:
        raise DegenerateAgreementError(f"tau-b between {what} is degenerate ({res.reason})")
    return res.value


def ranking_agreement(dataset: MetaEvalDataset, m1: Measure, m2: Measure) -> float:
    """Kendall tau-b between the per-metric values under two measures."""
    if dataset.K < 2:
        raise ValueError("ranking agreement needs at least 2 metrics")
    return _tau(_vector(dataset, m1), _vector(dataset, m2), f"{m1.token} and {m2.token}")


def agreement_heatmap(dataset: MetaEvalDataset, measures=ALL_MEASURES, workers: int = 1) -> AgreementMatrix:
    """All pairwise ranking agreements; failing cells are left unset (NaN)."""
    if dataset.K < 2:
        raise ValueError("ranking agreement needs at least 2 metrics")
    measures = list(measures)
    vectors = pmap(lambda m: measure_vector(dataset, m), measures, workers)
    n = len(measures)
    taus = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(i, n):
            a, b = vectors[i], vectors[j]
            if np.isnan(a).any() or np.isnan(b).any():
                continue
            res = kendall_tau_b(a, b)
            if res.defined:
                taus[i, j] = taus[j, i] = res.value
    return AgreementMatrix(measures, taus)


def write_heatmap(am: AgreementMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["", *am.tokens])
        for tok, row in zip(am.tokens, am.taus):
            w.writerow([tok, *("" if math.isnan(v) else repr(float(v)) for v in row)])
