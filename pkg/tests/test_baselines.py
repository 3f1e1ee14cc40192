import numpy as np
import pytest

from forecast_cf.baselines import TrainingBank, base_nn, base_shift, nearest_index
from forecast_cf.bounds import TrajectoryBounds


def _bank(targets, d=3):
    targets = np.asarray(targets, float)
    inputs = np.arange(len(targets) * d, dtype=float).reshape(len(targets), d)
    return TrainingBank(inputs, targets)


def test_picks_closest_target():
    bank = _bank([[1, 1], [5, 5]])
    x = base_nn(bank, TrajectoryBounds([0, 0], [4, 4]))
    np.testing.assert_array_equal(x, bank.inputs[0])


def test_single_window_bank():
    bank = _bank([[100, 100]])
    np.testing.assert_array_equal(base_nn(bank, TrajectoryBounds([0, 0], [1, 1])), bank.inputs[0])


def test_tie_goes_to_first():
    bank = _bank([[3, 3], [1, 1], [3, 3]])
    assert nearest_index(bank, TrajectoryBounds([2, 2], [2, 2])) == 0


def test_empty_bank():
    with pytest.raises(ValueError):
        base_nn(TrainingBank(np.zeros((0, 2)), np.zeros((0, 2))), TrajectoryBounds([0, 0], [1, 1]))


def test_horizon_mismatch():
    with pytest.raises(ValueError):
        base_nn(_bank([[1, 1]]), TrajectoryBounds([0], [1]))


def test_matches_brute_force_scan():
    rng = np.random.default_rng(5)
    bank = TrainingBank(rng.normal(size=(1000, 6)), rng.normal(size=(1000, 4)))
    for _ in range(20):
        lo = rng.normal(size=4)
        b = TrajectoryBounds(lo, lo + rng.uniform(size=4))
        mid = [(a + c) / 2 for a, c in zip(b.alpha, b.beta)]
        best, best_d = None, float("inf")
        for i, y in enumerate(bank.targets):
            dist = sum((yi - mi) ** 2 for yi, mi in zip(y, mid)) ** 0.5
            if dist < best_d:
                best, best_d = i, dist
        got = base_nn(bank, b)
        np.testing.assert_array_equal(got, bank.inputs[best])
        assert any(np.array_equal(got, row) for row in bank.inputs)


@pytest.mark.parametrize("x, cp, expected", [([1, 2], 0.1, [1.1, 2.2]), ([4], -0.5, [2])])
def test_shift(x, cp, expected):
    np.testing.assert_allclose(base_shift(x, cp), expected, rtol=1e-15)


def test_shift_zero_is_identity():
    x = np.array([0.3, -1.7, 2.2])
    assert base_shift(x, 0.0).tobytes() == x.tobytes()


def test_shift_is_linear():
    x = np.random.default_rng(0).normal(size=7)
    np.testing.assert_allclose(base_shift(3.5 * x, 0.2), 3.5 * base_shift(x, 0.2), rtol=1e-15)
