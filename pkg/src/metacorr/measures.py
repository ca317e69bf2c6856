"""The 12 grouped correlation measures between metric and human score matrices."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .coef import CoefKind, CoefResult, coefficient, coefficient_rows
from .data import MetaEvalDataset, ScoreMatrix


class Grouping(enum.Enum):
    GLOBAL = "global"
    INPUT = "input"
    ITEM = "item"
    SYSTEM = "system"


class UndefinedMeasureError(ArithmeticError):
    """Every group of a measure was degenerate, so it has no value."""


@dataclass(frozen=True)
class Measure:
    grouping: Grouping
    coef: CoefKind

    @property
    def token(self) -> str:
        return f"{self.grouping.value}-{self.coef.value}"

    def __str__(self):
        return self.token

    @classmethod
    def parse(cls, token: str) -> "Measure":
        try:
            g, c = token.strip().lower().split("-")
            return cls(Grouping(g), CoefKind(c))
        except ValueError:
            raise ValueError(
                f"unknown measure {token!r}; expected '<grouping>-<coef>' "
                f"with grouping in {[g.value for g in Grouping]} "
                f"and coef in {[c.value for c in CoefKind]}"
            ) from None


ALL_MEASURES: tuple[Measure, ...] = tuple(
    Measure(g, c) for g, c in itertools.product(Grouping, CoefKind)
)


def parse_measures(text: str | None) -> list[Measure]:
    """Parse a comma-separated token list; ``None``, "" or "all" give all 12."""
    if text is None or text.strip().lower() in ("", "all"):
        return list(ALL_MEASURES)
    out = [Measure.parse(tok) for tok in text.split(",") if tok.strip()]
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate measure in {text!r}")
    return out


@dataclass(frozen=True)
class MeasureResult:
    value: float | None
    group_count: int
    undefined_group_count: int
    per_group: list[CoefResult] | None = field(default=None, compare=False, repr=False)

    @property
    def defined(self) -> bool:
        return self.value is not None


def _row_means(a):
    # long double accumulation; system values differ by tiny margins across metrics
    return np.mean(a, axis=-1, dtype=np.longdouble).astype(np.float64)


def group_coefficients(measure: Measure, x, z) -> np.ndarray:
    """Per-group coefficients for stacks of matrices.

    ``x`` and ``z`` have shape (..., N, M) and broadcast against each other.
    Returns (..., G) with NaN for degenerate groups, where G is 1 for global
    and system grouping, M for input and N for item grouping.
    """
    vx, vz = _group_vectors(measure.grouping, x, z)
    return coefficient_rows(measure.coef, vx, vz)


def _group_vectors(g: Grouping, x, z):
    """Stacks of paired vectors, shape (..., G, n), one pair per group."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    x, z = np.broadcast_arrays(x, z)
    if g is Grouping.GLOBAL:
        shape = x.shape[:-2] + (1, x.shape[-2] * x.shape[-1])
        return x.reshape(shape), z.reshape(shape)
    if g is Grouping.INPUT:
        return np.swapaxes(x, -1, -2), np.swapaxes(z, -1, -2)
    if g is Grouping.ITEM:
        return x, z
    return _row_means(x)[..., None, :], _row_means(z)[..., None, :]


def measure_values(measure: Measure, x, z):
    """Vectorised measure over stacks of matrices.

    Returns ``(values, undefined_counts)``; ``values`` is NaN where every group
    is degenerate.
    """
    r = group_coefficients(measure, x, z)
    ok = ~np.isnan(r)
    count = ok.sum(axis=-1)
    total = np.where(ok, r, 0.0).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return values, r.shape[-1] - count


def _matrix(m):
    return m.values if isinstance(m, ScoreMatrix) else np.asarray(m, dtype=np.float64)


def evaluate(
    measure: Measure, x, z, keep_groups: bool = False, strict: bool = True
) -> MeasureResult:
    """Correlation of metric matrix ``x`` with human matrix ``z`` under ``measure``.

    Degenerate groups are left out of the input/item averages and counted.
    When no group is defined this raises :class:`UndefinedMeasureError`, or
    with ``strict=False`` returns a result whose value is None.
    """
    if isinstance(x, ScoreMatrix) and isinstance(z, ScoreMatrix) and not x.aligned_with(z):
        raise ValueError("score matrices are not aligned (system/input ids differ)")
    xv, zv = _matrix(x), _matrix(z)
    if xv.ndim != 2 or xv.shape != zv.shape:
        raise ValueError(f"matrix shapes differ: {xv.shape} vs {zv.shape}")
    vx, vz = _group_vectors(measure.grouping, xv, zv)
    r = coefficient_rows(measure.coef, vx, vz)
    ok = ~np.isnan(r)
    n_undef = int(r.size - ok.sum())
    if ok.any():
        value = float(r[ok].sum() / ok.sum())
    elif strict:
        raise UndefinedMeasureError(f"{measure.token}: all {r.size} groups are undefined")
    else:
        value = None
    per_group = None
    if keep_groups:
        per_group = [coefficient(measure.coef, a, b) for a, b in zip(vx, vz)]
    return MeasureResult(value, int(r.size), n_undef, per_group)


def evaluate_all(
    dataset: MetaEvalDataset, measure: Measure, strict: bool = True
) -> list[tuple[str, MeasureResult]]:
    out = []
    for name, m in dataset.metrics:
        try:
            out.append((name, evaluate(measure, m, dataset.human, strict=strict)))
        except UndefinedMeasureError as exc:
            raise UndefinedMeasureError(f"metric {name!r}: {exc}") from None
    return out


def measure_vector(dataset: MetaEvalDataset, measure: Measure) -> np.ndarray:
    """Measure value per metric (K,), NaN where undefined."""
    values, _ = measure_values(measure, dataset.metric_stack(), dataset.human.values)
    return values
