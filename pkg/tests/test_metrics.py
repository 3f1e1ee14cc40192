import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forecast_cf.bounds import TrajectoryBounds
from forecast_cf.metrics import (
    compactness,
    evaluate,
    forecast_accuracy,
    mase,
    prefix_valid_steps,
    proximity,
    smape,
    step_auc,
    validity_ratio,
)
from forecast_cf.series_data import WindowPair

UNIT = TrajectoryBounds([1.0, 1.0, 1.0], [2.0, 2.0, 2.0])


def _pattern(valid):
    """Forecast for UNIT-style bounds realising a per-step validity pattern."""
    T = len(valid)
    b = TrajectoryBounds(np.ones(T), np.full(T, 2.0))
    return np.where(np.asarray(valid, bool), 1.5, 5.0), b


def _survival_auc(patterns):
    # area under "share of samples with >= t consecutive valid steps from step 1" on the t/T grid
    T = len(patterns[0])
    area = 0.0
    for t in range(1, T + 1):
        share = np.mean([all(p[:t]) for p in patterns])
        area += share / T
    return area


class TestSmape:
    def test_perfect(self):
        assert smape([100], [100]) == 0.0

    def test_half(self):
        assert smape([100], [50]) == pytest.approx(66.667, abs=1e-3)
        assert smape([100], [50]) == pytest.approx(200 * 50 / 150, rel=1e-15)

    def test_zero_zero(self):
        assert smape([0], [0]) == 0.0

    @given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=20))
    def test_symmetric_and_bounded(self, pairs):
        a, f = np.array(pairs).T
        s = smape(a, f)
        assert s == pytest.approx(smape(f, a), abs=1e-9)
        assert 0.0 <= s <= 200.0 + 1e-9

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            smape([1, 2], [1])


class TestMase:
    def test_hand_value(self):
        assert mase(WindowPair("a", np.array([1.0, 2, 3]), np.array([4.0]), 0), [3.0], 1) == 1.0

    def test_perfect(self):
        assert mase(([1.0, 2, 3], [4.0, 5.0]), [4.0, 5.0], 1) == 0.0

    def test_constant_window_undefined(self):
        assert math.isnan(mase(([2.0, 2, 2], [2.0]), [3.0], 1))

    def test_equals_one_when_error_matches_naive(self):
        x, y = np.array([0.0, 1, 3, 2]), np.array([4.0, 4.0])
        scale = np.mean(np.abs(np.diff(np.concatenate([x, y]))))
        assert mase((x, y), y + scale * np.array([1, -1]), 1) == pytest.approx(1.0, rel=1e-15)

    def test_accuracy_excludes_undefined(self):
        acc = forecast_accuracy([[1.0, 2.0], [3.0, 3.0]], [[3.0], [3.0]], [[2.0], [4.0]], 1)
        assert acc["mase_excluded"] == 1
        assert acc["mase"] == pytest.approx(1.0)


class TestValidity:
    def test_fully_in_band(self):
        assert validity_ratio([([1.5, 1.5, 1.5], UNIT)]) == 1.0

    def test_half(self):
        b = TrajectoryBounds([1.0, 1.0], [2.0, 2.0])
        assert validity_ratio([([1.5, 5.0], b)]) == 0.5

    def test_mean_over_samples(self):
        b = TrajectoryBounds([1.0], [2.0])
        assert validity_ratio([([1.5], b), ([9.0], b)]) == 0.5

    def test_empty(self):
        with pytest.raises(ValueError):
            validity_ratio([])
        with pytest.raises(ValueError):
            step_auc([])


class TestStepAuc:
    def test_broken_chain(self):
        assert step_auc([_pattern([1, 0, 1])]) == 1 / 3

    def test_full(self):
        assert step_auc([_pattern([1, 1, 1, 1])]) == 1.0

    def test_first_step_invalid(self):
        assert step_auc([_pattern([0, 1, 1, 1])]) == 0.0
        assert prefix_valid_steps(*_pattern([0, 1, 1])) == 0

    def test_matches_survival_curve(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            patterns = rng.integers(0, 2, size=(rng.integers(1, 20), 6)).tolist()
            got = step_auc([_pattern(p) for p in patterns])
            assert got == pytest.approx(_survival_auc(patterns), abs=1e-12)

    def test_never_exceeds_validity_ratio(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            T = int(rng.integers(1, 12))
            results = []
            for _ in range(int(rng.integers(1, 8))):
                lo = rng.normal(size=T)
                results.append((rng.normal(size=T), TrajectoryBounds(lo, lo + rng.uniform(0, 2, size=T))))
            assert step_auc(results) <= validity_ratio(results)

    def test_permutation_invariant(self):
        results = [_pattern(p) for p in ([1, 0, 1], [1, 1, 0], [0, 0, 0], [1, 1, 1])]
        assert step_auc(results) == step_auc(results[::-1])
        assert validity_ratio(results) == validity_ratio(results[::-1])


class TestCloseness:
    def test_proximity_345(self):
        assert proximity([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0

    def test_proximity_identity(self):
        x = [[0.1, 0.2], [3.0, -1.0]]
        assert proximity(x, x) == 0.0

    def test_proximity_mean(self):
        assert proximity([[0.0], [0.0]], [[1.0], [3.0]]) == 2.0

    def test_compactness_identity(self):
        x = [[0.1, 0.2, 0.3]]
        assert compactness(x, x, 0.0) == 1.0

    def test_compactness_half(self):
        assert compactness([[0.0, 0.0]], [[0.005, 0.5]], 0.01) == 0.5

    def test_compactness_strict(self):
        assert compactness([[0.0, 1.0]], [[0.1, 1.1]], 0.0) == 0.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            proximity([[0.0]], [[0.0], [1.0]])
        with pytest.raises(ValueError):
            compactness([[0.0]], [[0.0, 1.0]])
        with pytest.raises(ValueError):
            compactness([[0.0]], [[0.0]], tol=-1)


def test_report_round_trip():
    originals = [np.zeros(3), np.ones(3)]
    cfs = [np.zeros(3), np.ones(3) + 0.5]
    forecasts = [np.array([1.5, 5.0, 1.5]), np.array([1.5, 1.5, 1.5])]
    report = evaluate(originals, cfs, forecasts, [UNIT, UNIT], tol=0.01, accuracy={"smape": 1.0})
    assert report.K == 2
    assert report.per_sample[0]["prefix_valid_steps"] == 1
    assert report.aggregate["validity_ratio"] == pytest.approx((2 / 3 + 1) / 2)
    assert report.aggregate["step_auc"] == pytest.approx((1 / 3 + 1) / 2)
    assert report.aggregate["compactness"] == 0.5
    assert report.aggregate["smape"] == 1.0
    lines = report.to_csv().splitlines()
    assert lines[0] == "sample_id,validity_ratio,prefix_valid_steps,proximity,compactness"
    assert len(lines) == 3
    assert '"validity_ratio"' in report.to_json()
