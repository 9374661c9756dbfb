"""ROC curve and AUC against the independent pairwise-concordance oracle.

The oracle never builds a curve: AUC equals the probability that a random
positive outscores a random negative, ties counting half. Every curve-based
value must agree with it to float precision.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import pairwise_auc

from interconv import (
    RocCurve,
    UndefinedMetricError,
    auc,
    roc_curve,
    sensitivity,
    specificity,
    write_roc_csv,
)


def test_worked_example_perfect_separation():
    y = [0, 0, 1, 1]
    s = [0.0, 0.2, 0.4, 0.8]
    assert auc(y, s) == pytest.approx(1.0, abs=1e-12)
    assert pairwise_auc(y, s) == 1.0


def test_worked_example_with_tie():
    # one positive ties one negative at 0.2: (3 + 0.5) / 4
    y = [0, 0, 1, 1]
    s = [0.0, 0.2, 0.2, 0.8]
    assert pairwise_auc(y, s) == 0.875
    assert auc(y, s) == pytest.approx(0.875, abs=1e-12)


def test_reversed_scores_give_zero():
    y = [0, 0, 1, 1]
    s = [0.9, 0.8, 0.2, 0.1]
    assert auc(y, s) == pytest.approx(0.0, abs=1e-12)


def test_constant_scores_give_half():
    assert auc([0, 1, 0, 1], [0.3, 0.3, 0.3, 0.3]) == pytest.approx(0.5)


def test_agrees_with_pairwise_oracle_on_random_data(rng):
    for _ in range(300):
        n = int(rng.integers(2, 40))
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        # coarse grid forces plenty of tied scores
        s = rng.integers(0, 5, size=n) / 4.0
        assert auc(y, s) == pytest.approx(pairwise_auc(y, s), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.booleans(), min_size=2, max_size=25).filter(
        lambda v: any(v) and not all(v)
    ),
    st.data(),
)
def test_pairwise_equivalence_property(labels, data):
    y = np.array(labels, dtype=int)
    s = np.array(
        data.draw(
            st.lists(
                st.integers(0, 6), min_size=len(labels), max_size=len(labels)
            )
        ),
        dtype=float,
    )
    assert auc(y, s) == pytest.approx(pairwise_auc(y, s), abs=1e-9)


def test_complement_symmetry(rng):
    # flipping score order flips concordance around 1/2
    for _ in range(50):
        y = rng.integers(0, 2, size=30)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        s = rng.integers(0, 8, size=30) / 7.0
        assert auc(y, s) + auc(y, -s) == pytest.approx(1.0, abs=1e-9)


def test_curve_thresholds_descend_with_sentinels():
    curve = roc_curve([0, 1, 0, 1], [0.1, 0.4, 0.4, 0.9])
    assert curve.thresholds[0] == np.inf
    assert curve.thresholds[-1] == -np.inf
    assert np.all(np.diff(curve.thresholds) < 0)
    # distinct scores only, each appearing once between the sentinels
    assert list(curve.thresholds[1:-1]) == [0.9, 0.4, 0.1]


def test_curve_endpoints():
    curve = roc_curve([0, 1, 1], [0.2, 0.5, 0.7])
    assert curve.sens[0] == 0.0 and curve.spec[0] == 1.0
    assert curve.sens[-1] == 1.0 and curve.spec[-1] == 0.0


def test_rule_is_strictly_greater():
    # at threshold 0.5 the score 0.5 itself is classified negative
    y = [1, 0]
    s = [0.5, 0.1]
    assert sensitivity(y, s, 0.5) == 0.0
    assert specificity(y, s, 0.5) == 1.0
    assert sensitivity(y, s, 0.4) == 1.0


def test_sensitivity_requires_a_positive():
    with pytest.raises(UndefinedMetricError):
        sensitivity([0, 0], [0.1, 0.9], 0.5)


def test_specificity_requires_a_negative():
    with pytest.raises(UndefinedMetricError):
        specificity([1, 1], [0.1, 0.9], 0.5)


def test_auc_requires_both_classes():
    with pytest.raises(UndefinedMetricError):
        auc([1, 1, 1], [0.1, 0.5, 0.9])


def test_curve_matches_pointwise_metrics(rng):
    y = rng.integers(0, 2, size=50)
    y[:2] = [0, 1]
    s = rng.integers(0, 10, size=50) / 9.0
    curve = roc_curve(y, s)
    for t, se, sp in zip(curve.thresholds[1:-1], curve.sens[1:-1], curve.spec[1:-1]):
        assert se == pytest.approx(sensitivity(y, s, t))
        assert sp == pytest.approx(specificity(y, s, t))


def test_roc_csv_round_trips(tmp_path):
    curve = roc_curve([0, 1, 0, 1], [0.2, 0.8, 0.5, 0.5])
    path = tmp_path / "roc.csv"
    write_roc_csv(path, curve)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "threshold,sensitivity,specificity"
    assert len(rows) == 1 + len(curve.thresholds)
    got = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    assert np.array_equal(got[:, 1], curve.sens)
    assert np.array_equal(got[:, 2], curve.spec)


def test_curve_is_a_frozen_record():
    curve = roc_curve([0, 1], [0.1, 0.9])
    assert isinstance(curve, RocCurve)
    with pytest.raises(AttributeError):
        curve.auc = 0.0
