from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset, pearson_direct, summeval_like
from metacorr.coef import CoefKind, coefficient
from metacorr.measures import (
    ALL_MEASURES,
    Grouping,
    Measure,
    UndefinedMeasureError,
    evaluate,
    evaluate_all,
    measure_values,
    measure_vector,
    parse_measures,
)

GP = Measure(Grouping.GLOBAL, CoefKind.PEARSON)


def test_tokens_and_parsing():
    assert len(ALL_MEASURES) == 12
    assert ALL_MEASURES[0].token == "global-pearson"
    assert Measure.parse("System-Kendall") == Measure(Grouping.SYSTEM, CoefKind.KENDALL)
    assert parse_measures("all") == list(ALL_MEASURES)
    assert [m.token for m in parse_measures("item-kendall,global-spearman")] == [
        "item-kendall", "global-spearman"
    ]
    with pytest.raises(ValueError, match="unknown measure"):
        Measure.parse("pairwise-pearson")
    with pytest.raises(ValueError, match="duplicate"):
        parse_measures("global-pearson,global-pearson")


def test_identity_gives_one_for_all_measures():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 9))
    for m in ALL_MEASURES:
        assert evaluate(m, x, x).value == pytest.approx(1.0, abs=1e-12)


def test_global_reversed():
    x = [[1, 2], [3, 4]]
    z = [[4, 3], [2, 1]]
    assert evaluate(GP, x, z).value == pytest.approx(-1.0, abs=1e-15)


def test_system_two_points():
    x = [[1, 2], [3, 4]]
    z = [[2, 1], [5, 9]]
    assert evaluate(Measure(Grouping.SYSTEM, CoefKind.PEARSON), x, z).value == pytest.approx(1.0, abs=1e-15)


def test_group_semantics_against_loops():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 4, (5, 7)).astype(float)
    z = rng.integers(0, 4, (5, 7)).astype(float)
    for kind in CoefKind:
        def avg(pairs):
            vals = [coefficient(kind, a, b) for a, b in pairs]
            vals = [v.value for v in vals if v.defined]
            return sum(vals) / len(vals)
        assert evaluate(Measure(Grouping.INPUT, kind), x, z).value == pytest.approx(avg(zip(x.T, z.T)), abs=1e-12)
        assert evaluate(Measure(Grouping.ITEM, kind), x, z).value == pytest.approx(avg(zip(x, z)), abs=1e-12)
        assert evaluate(Measure(Grouping.SYSTEM, kind), x, z).value == pytest.approx(
            coefficient(kind, x.mean(1), z.mean(1)).value, abs=1e-12
        )
        assert evaluate(Measure(Grouping.GLOBAL, kind), x, z).value == pytest.approx(
            coefficient(kind, x.ravel(), z.ravel()).value, abs=1e-12
        )


def test_degenerate_groups_skipped_and_counted():
    x = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [3.0, 1.0, 2.0]])
    z = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 4.0], [1.0, 2.0, 3.0]])
    res = evaluate(Measure(Grouping.ITEM, CoefKind.PEARSON), x, z, keep_groups=True)
    assert res.group_count == 3
    assert res.undefined_group_count == 1
    assert not res.per_group[0].defined
    expected = (pearson_direct([1, 2, 3], [1, 2, 4]) + pearson_direct([3, 1, 2], [1, 2, 3])) / 2
    assert res.value == pytest.approx(expected, abs=1e-12)


def test_all_groups_undefined():
    x = np.array([[1.0, 1.0], [2.0, 2.0]])
    z = np.array([[1.0, 2.0], [3.0, 4.0]])
    m = Measure(Grouping.ITEM, CoefKind.KENDALL)
    with pytest.raises(UndefinedMeasureError):
        evaluate(m, x, z)
    res = evaluate(m, x, z, strict=False)
    assert res.value is None and res.undefined_group_count == 2


def test_shape_mismatch():
    with pytest.raises(ValueError, match="shapes differ"):
        evaluate(GP, np.ones((2, 3)), np.ones((3, 2)))


def test_degeneration_to_global():
    rng = np.random.default_rng(2)
    col = rng.integers(0, 5, (7, 1)).astype(float)
    colz = rng.integers(0, 5, (7, 1)).astype(float)
    row = rng.integers(0, 5, (1, 9)).astype(float)
    rowz = rng.integers(0, 5, (1, 9)).astype(float)
    for kind in CoefKind:
        g = Measure(Grouping.GLOBAL, kind)
        assert measure_values(Measure(Grouping.INPUT, kind), col, colz)[0] == pytest.approx(
            measure_values(g, col, colz)[0], abs=1e-12
        )
        assert measure_values(Measure(Grouping.ITEM, kind), row, rowz)[0] == pytest.approx(
            measure_values(g, row, rowz)[0], abs=1e-12
        )


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_values_bounded(seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 3, (4, 5)).astype(float)
    z = rng.integers(0, 3, (4, 5)).astype(float)
    for m in ALL_MEASURES:
        r = evaluate(m, x, z, strict=False)
        if r.defined:
            assert -1.0 - 1e-12 <= r.value <= 1.0 + 1e-12


def test_system_means_resolve_tiny_differences():
    # row means differ in the last place; they must not collapse into ties
    z = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3 + 2e-16], [0.3, 0.2, 0.1]])
    x = np.array([[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [0.0, 0.0, 0.0]])
    r = evaluate(Measure(Grouping.SYSTEM, CoefKind.KENDALL), x, z, strict=False)
    assert r.defined


def test_evaluate_all_identity():
    z = np.random.default_rng(3).normal(size=(4, 6))
    ds = make_dataset(z, [z], names=["same"])
    [(name, res)] = evaluate_all(ds, GP)
    assert name == "same" and res.value == pytest.approx(1.0)


def test_evaluate_all_noise_ordering():
    rng = np.random.default_rng(4)
    z = rng.normal(size=(16, 100))
    metrics = [z + s * rng.normal(size=z.shape) for s in (0.1, 1.0, 3.0)]
    ds = make_dataset(z, metrics)
    results = evaluate_all(ds, GP)
    values = [r.value for _, r in results]
    assert values[0] > values[1] > values[2]
    for (name, res), x in zip(results, metrics):
        assert res.value == evaluate(GP, x, z).value


def test_evaluate_all_matches_standalone_on_fixture():
    ds = summeval_like()
    for m in ALL_MEASURES:
        results = evaluate_all(ds, m, strict=False)
        assert len(results) == 32
        vec = measure_vector(ds, m)
        for k, (name, res) in enumerate(results):
            alone = evaluate(m, ds.metric(name), ds.human, strict=False)
            assert res.value == alone.value
            assert vec[k] == pytest.approx(res.value, abs=1e-15)
