import statistics

import numpy as np
import pytest

from forecast_cf.bounds import BoundSpec, TrajectoryBounds, limited_bounds, make_bounds, polynomial_bounds


def _ramp_oracle(start, end, T, p):
    if T == 1:
        return [start]
    return [start + (end - start) * ((t - 1) / (T - 1)) ** p for t in range(1, T + 1)]


class TestPolynomial:
    def test_flat_degenerate_band(self):
        b = polynomial_bounds([2, 2, 2], 3, BoundSpec(fraction=1, change_percent=0, poly_order=3))
        np.testing.assert_array_equal(b.alpha, [2, 2, 2])
        np.testing.assert_array_equal(b.beta, [2, 2, 2])

    def test_change_percent_end_value(self):
        b = polynomial_bounds([2, 2, 2], 2, BoundSpec(fraction=1, change_percent=0.1))
        np.testing.assert_allclose(b.alpha, [2, 2.2], rtol=0, atol=1e-15)
        np.testing.assert_allclose(b.beta, [2, 2.2], rtol=0, atol=1e-15)

    def test_start_values(self):
        sigma = statistics.pstdev([0, 2, 4])
        assert sigma == pytest.approx(1.632993, abs=1e-6)
        b = polynomial_bounds([0, 2, 4], 1, BoundSpec(fraction=0.5))
        np.testing.assert_allclose(b.alpha, [2 * (1 - 0.5 * sigma)], rtol=1e-15)
        np.testing.assert_allclose(b.beta, [2 * (1 + 0.5 * sigma)], rtol=1e-15)
        np.testing.assert_allclose(b.alpha, [0.3670068], atol=1e-7)
        np.testing.assert_allclose(b.beta, [3.6329932], atol=1e-7)

    @pytest.mark.parametrize("center, fn", [
        ("median", statistics.median), ("mean", statistics.fmean), ("max", max), ("min", min), ("last", lambda v: v[-1]),
    ])
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_against_loop_oracle(self, center, fn, order):
        x = [1.0, 3.0, 2.0, 5.0, 4.0]
        spec = BoundSpec(center=center, shift=0.05, fraction=0.3, change_percent=-0.2, poly_order=order)
        b = polynomial_bounds(x, 6, spec)
        c, sd = fn(x), statistics.pstdev(x)
        a1, b1 = c * (1 + 0.05 - 0.3 * sd), c * (1 + 0.05 + 0.3 * sd)
        np.testing.assert_allclose(b.alpha, _ramp_oracle(a1, a1 + c * -0.2, 6, order), rtol=1e-13)
        np.testing.assert_allclose(b.beta, _ramp_oracle(b1, b1 + c * -0.2, 6, order), rtol=1e-13)

    def test_zero_fraction_collapses(self):
        b = polynomial_bounds([1, 2, 3], 4, BoundSpec(fraction=0, change_percent=0.3, poly_order=2))
        np.testing.assert_array_equal(b.alpha, b.beta)

    def test_monotone_in_fraction(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.uniform(0.1, 2, size=8)
            narrow = polynomial_bounds(x, 5, BoundSpec(fraction=0.5, change_percent=0.2, poly_order=2))
            wide = polynomial_bounds(x, 5, BoundSpec(fraction=1.5, change_percent=0.2, poly_order=2))
            assert np.all(wide.alpha <= narrow.alpha) and np.all(wide.beta >= narrow.beta)

    def test_negative_center_swaps(self):
        b = polynomial_bounds([-3.0, -2.0, -1.0], 3, BoundSpec(fraction=1))
        assert np.all(b.alpha <= b.beta)

    def test_empty_input(self):
        with pytest.raises(ValueError):
            polynomial_bounds([], 3, BoundSpec())

    @pytest.mark.parametrize("kwargs", [{"fraction": -1}, {"poly_order": 0}, {"center": "mode"}, {"limits": (2, 1)}])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            BoundSpec(**kwargs)


class TestLimited:
    def test_clamp(self):
        b = limited_bounds(TrajectoryBounds([0.1, 0.5], [1.0, 2.0]), 0.3, 1.5)
        np.testing.assert_array_equal(b.alpha, [0.3, 0.5])
        np.testing.assert_array_equal(b.beta, [1.0, 1.5])

    def test_wide_limits_noop(self):
        orig = TrajectoryBounds([0.1, 0.5], [1.0, 2.0])
        b = limited_bounds(orig, -10, 10)
        np.testing.assert_array_equal(b.alpha, orig.alpha)
        np.testing.assert_array_equal(b.beta, orig.beta)

    def test_crossed(self):
        with pytest.raises(ValueError, match="cross"):
            limited_bounds(TrajectoryBounds([1.0], [1.2]), 1.5, 1.6)

    def test_make_bounds_applies_limits(self):
        b = make_bounds([1, 2, 3], 4, BoundSpec(fraction=1, change_percent=0.5, limits=(1.0, 2.5)))
        assert b.alpha.min() >= 1.0 and b.beta.max() <= 2.5


def test_bounds_reject_crossing():
    with pytest.raises(ValueError):
        TrajectoryBounds([1.0, 2.0], [1.5, 1.5])
