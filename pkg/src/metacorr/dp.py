"""Discriminative power: mean pairwise permutation-test p-value under a measure.

Lower is better: a measure that separates metrics well yields many small
p-values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .data import MetaEvalDataset
from .measures import Measure
from .sigtest import PermTestConfig, PValueMatrix, pairwise_pvalues

ORIENTATION = "lower dp_value means stronger discriminative power"


@dataclass
class DPReport:
    measure: Measure
    dp_value: float
    pair_pvalues: PValueMatrix
    curve: np.ndarray  # all K(K-1)/2 pair p-values, descending

    orientation = ORIENTATION

    @property
    def pair_count(self) -> int:
        return len(self.curve)

    @property
    def degenerate_pairs(self):
        return self.pair_pvalues.degenerate_pairs


def discriminative_power(
    dataset: MetaEvalDataset, measure: Measure, cfg: PermTestConfig, workers: int = 1
) -> DPReport:
    pm = pairwise_pvalues(dataset, measure, cfg, workers=workers)
    upper = pm.upper()
    curve = np.sort(upper)[::-1]
    dp_value = math.fsum(upper) / len(upper)
    return DPReport(measure, dp_value, pm, curve)


def curve_export(report: DPReport, path) -> None:
    """Write the descending p-value curve as (pair_rank, p_value) rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_rank", "p_value"])
        for rank, p in enumerate(report.curve, start=1):
            w.writerow([rank, repr(float(p))])


def read_curve(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return np.array([float(row["p_value"]) for row in reader])


def dp_from_curve(curve) -> float:
    """Area under the p-value curve divided by the number of pairs."""
    curve = np.asarray(curve, dtype=np.float64)
    return math.fsum(curve) / len(curve)
