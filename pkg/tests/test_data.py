import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from physforecast.data import (
    DailySeries, DataError, SplitSpec, Standardizer, load_csv, make_windows, split, synth_generate,
    write_csv,
)
from physforecast.training import physics_residuals

# calendar arithmetic, counted with datetime independently of the library
DAYS_2008_2018 = 4018
DAYS_TRAIN = 1827
DAYS_VAL = 1095
DAYS_TEST = 1096
WINDOWS_TRAIN = 1708  # 1827 - 120 + 1


def _write(path, rows, header="date,t2m_celsius"):
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def test_two_row_file(tmp_path):
    s = load_csv(_write(tmp_path / "a.csv", ["2008-01-01,1.5", "2008-01-02,-2.25"]), "a")
    assert len(s) == 2 and s.start == dt.date(2008, 1, 1)
    np.testing.assert_array_equal(s.temps, [1.5, -2.25])


@pytest.mark.parametrize("rows, message", [
    (["2008-01-01,1", "2008-01-03,2"], "missing day 2008-01-02"),
    (["2008-01-01,1", "2008-01-01,2"], "duplicate date 2008-01-01"),
    (["2008-01-02,1", "2008-01-01,2"], "out of order"),
    (["2008-01-01,warm"], "non-numeric"),
    (["2008-01-01,nan"], "non-finite"),
    (["2008-01-01,80.5"], "implausible"),
    (["2008-01-01,-81"], "implausible"),
    (["01/02/2008,1"], "ISO date"),
    (["2008-01-01,1,2"], "2 fields"),
])
def test_csv_rejections(tmp_path, rows, message):
    with pytest.raises(DataError, match=message):
        load_csv(_write(tmp_path / "bad.csv", rows))


def test_csv_header_and_missing_file(tmp_path):
    with pytest.raises(DataError, match="header"):
        load_csv(_write(tmp_path / "h.csv", ["2008-01-01,1"], header="day,temp"))
    with pytest.raises(FileNotFoundError, match="nope.csv"):
        load_csv(tmp_path / "nope.csv")


def test_decimal_parse_is_locale_independent(tmp_path):
    s = load_csv(_write(tmp_path / "a.csv", ["2008-01-01,1e1", "2008-01-02, -0.5"]))
    np.testing.assert_array_equal(s.temps, [10.0, -0.5])


def _full_series(seed=0):
    return synth_generate(amplitude=10, offset=12, noise_sigma=2.0, days=DAYS_2008_2018, seed=seed, city="c")


def test_day_counts_and_split():
    s = _full_series()
    assert s.end == dt.date(2018, 12, 31)
    assert (dt.date(2018, 12, 31) - dt.date(2008, 1, 1)).days + 1 == len(s) == DAYS_2008_2018
    tr, va, te = split(s)
    assert (len(tr), len(va), len(te)) == (DAYS_TRAIN, DAYS_VAL, DAYS_TEST)
    assert tr.start == dt.date(2008, 1, 1) and tr.end == dt.date(2012, 12, 31)
    assert va.start == dt.date(2013, 1, 1) and te.end == dt.date(2018, 12, 31)
    np.testing.assert_array_equal(np.concatenate([tr.temps, va.temps, te.temps]), s.temps)


def test_split_errors():
    short = synth_generate(days=1000)
    with pytest.raises(DataError, match="not covered"):
        split(short)
    with pytest.raises(ValueError):
        SplitSpec(train=(2008, 2013), val=(2013, 2015))
    with pytest.raises(ValueError):
        SplitSpec(train=(2012, 2008))


def test_standardizer():
    tr, va, te = split(_full_series())
    std = Standardizer.fit(tr)
    z = std.apply(tr.temps)
    assert abs(z.mean()) < 1e-10 and abs(z.std() - 1) < 1e-10
    assert std.mu == pytest.approx(np.mean(tr.temps)) and std.sigma == pytest.approx(np.std(tr.temps, ddof=0))
    np.testing.assert_allclose(std.invert(std.apply(te.temps)), te.temps, atol=1e-12)
    with pytest.raises(DataError):
        Standardizer.fit(np.ones(10))


def test_no_leakage_from_val_or_test():
    s = _full_series()
    tr, va, te = split(s)
    std = Standardizer.fit(tr)
    # perturb val and test heavily: train statistics must not move
    s2 = DailySeries("c", s.start, np.concatenate([tr.temps, va.temps + 50, te.temps - 50]))
    tr2, _, te2 = split(s2)
    assert Standardizer.fit(tr2) == std
    np.testing.assert_array_equal(std.apply(te2.temps), (te.temps - 50 - std.mu) / std.sigma)


def test_window_counts_and_contiguity():
    assert len(make_windows(np.arange(120.0))) == 1
    tr, va, _ = split(_full_series())
    w = make_windows(tr.temps)
    assert len(w) == WINDOWS_TRAIN
    np.testing.assert_array_equal(np.concatenate([w.inputs[0], w.targets[0]]), tr.temps[:120])
    k = 517
    np.testing.assert_array_equal(w.inputs[k], tr.temps[k:k + 90])
    np.testing.assert_array_equal(w.targets[k], tr.temps[k + 90:k + 120])
    # last window ends on the last training day: nothing from val leaks in
    np.testing.assert_array_equal(w.targets[-1], tr.temps[-30:])
    assert len(make_windows(va.temps)) == DAYS_VAL - 119
    with pytest.raises(DataError):
        make_windows(np.arange(119.0))


@settings(max_examples=60, deadline=None)
@given(st.integers(120, 600), st.integers(1, 40))
def test_window_count_with_stride(n, stride):
    w = make_windows(np.arange(float(n)), stride=stride)
    assert len(w) == (n - 120) // stride + 1
    assert np.all(w.targets[:, 0] == w.inputs[:, -1] + 1)


def test_csv_round_trip(tmp_path):
    s = _full_series()
    write_csv(s, tmp_path / "s.csv")
    back = load_csv(tmp_path / "s.csv", "c")
    assert back.start == s.start and np.array_equal(back.temps, s.temps)


def test_synthetic_examples():
    s = synth_generate(1.0, 0.0, noise_sigma=0.0, days=400)
    assert s.temps[0] == 1.0 and s.start == dt.date(2008, 1, 1)
    assert np.max(np.abs(physics_residuals(s.temps))) < 1e-8
    a, b = synth_generate(noise_sigma=0.3, seed=4), synth_generate(noise_sigma=0.3, seed=4)
    assert np.array_equal(a.temps, b.temps)
    assert not np.array_equal(a.temps, synth_generate(noise_sigma=0.3, seed=5).temps)
    shifted = synth_generate(2.0, 0.5, noise_sigma=0.0, days=10, start=dt.date(2000, 3, 1), offset=7.0)
    np.testing.assert_allclose(shifted.temps, 7 + 2 * np.cos(2 * np.pi / 365 * np.arange(10) + 0.5))
    assert shifted.start == dt.date(2000, 3, 1)
    with pytest.raises(ValueError):
        synth_generate(days=0)
    with pytest.raises(ValueError):
        synth_generate(noise_sigma=-1)


def test_series_invariants():
    with pytest.raises(DataError):
        DailySeries("x", dt.date(2008, 1, 1), [1.0, np.inf])
    s = DailySeries("x", dt.date(2008, 2, 27), np.arange(5.0))
    assert s.dates[2] == dt.date(2008, 2, 29)
    np.testing.assert_array_equal(s.days_since(dt.date(2008, 2, 26)), [1, 2, 3, 4, 5])
    with pytest.raises(DataError):
        s.between(dt.date(2008, 2, 1), dt.date(2008, 2, 28))
