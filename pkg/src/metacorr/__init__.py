"""Meta-evaluation of correlation measures between automatic metrics and human scores."""

__version__ = "0.1.0"

from .coef import CoefKind, CoefResult, fractional_ranks, kendall_tau_b, pearson, spearman
from .data import (
    DatasetError,
    GranularitySpec,
    MetaEvalDataset,
    ScoreMatrix,
    granularity,
    load_dataset,
    normalize_01,
    tie_ratio,
)
from .measures import (
    ALL_MEASURES,
    Grouping,
    Measure,
    MeasureResult,
    UndefinedMeasureError,
    evaluate,
    evaluate_all,
)

__all__ = [
    "ALL_MEASURES",
    "CoefKind",
    "CoefResult",
    "DatasetError",
    "GranularitySpec",
    "Grouping",
    "Measure",
    "MeasureResult",
    "MetaEvalDataset",
    "ScoreMatrix",
    "UndefinedMeasureError",
    "evaluate",
    "evaluate_all",
    "fractional_ranks",
    "granularity",
    "kendall_tau_b",
    "load_dataset",
    "normalize_01",
    "pearson",
    "spearman",
    "tie_ratio",
]
