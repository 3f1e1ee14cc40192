import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forecast_cf.errors import DataError
from forecast_cf.series_data import (
    SplitSpec,
    TimeSeries,
    apply_scale,
    chronological_split,
    fit_scaler,
    invert_scale,
    load_csv,
    make_windows,
    prepare_windows,
    window_count,
)

from .conftest import DATA


def _write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_single_series(self, tmp_path):
        p = _write(tmp_path, "series_id,timestamp,value\na,1,1\na,2,2\na,3,3\n")
        series = load_csv(p)
        assert list(series) == ["a"]
        np.testing.assert_array_equal(series["a"].values, [1, 2, 3])

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(_write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(_write(tmp_path, "series_id,timestamp,value\n"))

    def test_interleaved_matches_sorted_fixture(self):
        got = load_csv(DATA / "interleaved.csv")
        want = load_csv(DATA / "interleaved_sorted.csv")
        assert sorted(got) == sorted(want) == ["a", "b"]
        for sid in want:
            np.testing.assert_array_equal(got[sid].values, want[sid].values)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv")

    @pytest.mark.parametrize("body, needle", [
        ("a,1,1\na,2,xyz\n", "row 3: non-numeric"),
        ("a,1,1\na,1,2\n", "row 3: duplicate timestamp"),
        ("a,2,1\nb,1,5\na,1,2\n", "row 4: timestamps"),
        ("a,1,1\na,2,nan\n", "row 3: non-finite"),
    ])
    def test_errors_carry_row_number(self, tmp_path, body, needle):
        with pytest.raises(DataError, match=needle):
            load_csv(_write(tmp_path, "series_id,timestamp,value\n" + body))

    def test_rejects_non_finite_series(self):
        with pytest.raises(DataError):
            TimeSeries("x", [1.0, np.inf])


class TestSplit:
    @pytest.mark.parametrize("n, lengths", [(10, (6, 2, 2)), (5, (3, 1, 1)), (100, (60, 20, 20))])
    def test_lengths(self, n, lengths):
        chunks = chronological_split(TimeSeries("a", np.arange(n)), SplitSpec(1, 1))
        assert tuple(c.size for c in chunks) == lengths

    def test_too_short(self):
        with pytest.raises(DataError, match="cannot be split"):
            chronological_split(TimeSeries("a", [1.0, 2.0]), SplitSpec(1, 1))

    def test_bad_fractions(self):
        with pytest.raises(ValueError):
            SplitSpec(2, 1, 0.5, 0.2, 0.2)

    @given(n=st.integers(3, 400), train=st.floats(0.05, 0.9))
    def test_concatenation_reproduces_series(self, n, train):
        val = (1 - train) / 2
        spec = SplitSpec(1, 1, train, val, 1 - train - val)
        values = np.random.default_rng(n).normal(size=n)
        chunks = chronological_split(TimeSeries("a", values), spec)
        np.testing.assert_array_equal(np.concatenate(chunks), values)


class TestWindows:
    def test_enumeration(self):
        w = make_windows(np.arange(6.0), 2, 1, 1)
        assert [p.origin_index for p in w] == [0, 1, 2, 3]

    def test_exact_fit(self):
        assert len(make_windows(np.arange(3.0), 2, 1, 1)) == 1

    def test_strided(self):
        w = make_windows(np.arange(48.0), 24, 8, 8)
        assert [p.origin_index for p in w] == [0, 8, 16]

    def test_short_chunk_gives_nothing(self):
        assert make_windows(np.arange(4.0), 3, 2, 1) == []

    @settings(max_examples=60)
    @given(length=st.integers(0, 80), d=st.integers(1, 10), T=st.integers(1, 5), stride=st.integers(1, 6))
    def test_count_and_contents(self, length, d, T, stride):
        chunk = np.arange(length, dtype=float) * 1.5
        w = make_windows(chunk, d, T, stride, offset=100)
        assert len(w) == window_count(length, d, T, stride)
        if length >= d + T:
            assert len(w) == (length - d - T) // stride + 1
        for p in w:
            o = p.origin_index - 100
            np.testing.assert_array_equal(np.concatenate([p.input, p.target]), chunk[o:o + d + T])


class TestScaler:
    def test_midpoint(self):
        assert apply_scale(fit_scaler([0, 10]), [5])[0] == 0.5

    def test_degenerate(self):
        s = fit_scaler([2, 2, 2])
        assert apply_scale(s, [2])[0] == 0.0
        assert invert_scale(s, [0.0])[0] == 2.0

    def test_round_trip(self):
        s = fit_scaler([1, 3])
        np.testing.assert_allclose(invert_scale(s, apply_scale(s, [1.7, 2.9])), [1.7, 2.9], rtol=0, atol=1e-12)

    def test_empty(self):
        with pytest.raises(DataError):
            fit_scaler([])

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50))
    def test_training_values_in_unit_interval(self, values):
        s = fit_scaler(values)
        scaled = s.apply(values)
        if s.max > s.min:
            assert scaled.min() >= 0 and scaled.max() <= 1
            np.testing.assert_allclose(s.invert(scaled), values, rtol=0, atol=1e-12 * max(1, np.abs(values).max()))


def test_prepare_pools_and_skips():
    rng = np.random.default_rng(0)
    series = [TimeSeries(f"s{i}", rng.normal(size=60)) for i in range(3)] + [TimeSeries("tiny", [1.0, 2.0])]
    data = prepare_windows(series, SplitSpec(4, 2))
    assert data.skipped == ["tiny"]
    # 60 -> 36/12/12 steps -> 31/7/7 windows per series
    assert data.counts() == {"train": 93, "val": 21, "test": 21}
    # test windows use the training-chunk scaler
    s0 = data.scalers["s0"]
    raw = series[0].values
    i = data.test.series_ids.index("s0")
    origin = data.test.origins[i]
    np.testing.assert_allclose(data.test.inputs[i], s0.apply(raw[origin:origin + 4]))
