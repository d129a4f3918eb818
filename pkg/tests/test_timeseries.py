import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cgan_strategies.errors import DegenerateScaleError, InsufficientHistoryError
from cgan_strategies.timeseries import (
    PriceSeries, ReturnSeries, ScalerParams, acf, build_lagged, ci_bounds, compute_excess_log_returns,
    fit_zscore, load_returns, pacf, read_price_csv, read_returns_csv, write_returns_csv,
)

from conftest import ar1

DATES = np.array(["2020-01-02", "2020-01-03"], dtype="datetime64[D]")


def test_flat_prices_give_zero_return():
    r = compute_excess_log_returns(PriceSeries(DATES, [100.0, 100.0]))
    assert r.returns.tolist() == [0.0]
    assert r.dates[0] == DATES[1]


def test_log_return():
    r = compute_excess_log_returns(PriceSeries(DATES, [100.0, 110.0]))
    assert r.returns[0] == pytest.approx(math.log(1.1), abs=1e-15)
    assert round(r.returns[0], 5) == 0.09531


def test_excess_over_benchmark():
    r = compute_excess_log_returns(PriceSeries(DATES, [100.0, 110.0], [0.0252, 0.0252]))
    assert r.returns[0] == pytest.approx(math.log(1.1) - 0.0252 / 252, abs=1e-15)
    assert round(r.returns[0], 5) == 0.09521


def test_nonpositive_price_names_date():
    with pytest.raises(ValueError, match="2020-01-03"):
        compute_excess_log_returns(PriceSeries(DATES, [100.0, 0.0]))


def test_single_price_rejected():
    with pytest.raises(InsufficientHistoryError):
        compute_excess_log_returns(PriceSeries(DATES[:1], [100.0]))


def test_unsorted_dates_rejected():
    with pytest.raises(ValueError):
        PriceSeries(DATES[::-1], [1.0, 2.0])


def test_csv_roundtrip(tmp_path):
    src = tmp_path / "p.csv"
    src.write_text("date,price,rate\n2020-01-02,100,0.01\n2020-01-03,101,0.01\n2020-01-06,99.5,0.02\n")
    r = compute_excess_log_returns(read_price_csv(src))
    out = tmp_path / "r.csv"
    write_returns_csv(r, out)
    back = read_returns_csv(out)
    assert np.array_equal(back.returns, r.returns)
    assert np.array_equal(back.dates, r.dates)
    assert np.array_equal(load_returns(src).returns, r.returns)
    assert np.array_equal(load_returns(out).returns, r.returns)


def test_missing_price_cell_rejected(tmp_path):
    src = tmp_path / "p.csv"
    src.write_text("date,price\n2020-01-02,100\n2020-01-03,\n")
    with pytest.raises(ValueError, match="missing price"):
        read_price_csv(src)


def test_zscore_constant_rejected():
    with pytest.raises(DegenerateScaleError):
        fit_zscore([1.0, 1.0, 1.0])


def test_zscore_population_std():
    s = fit_zscore([0.0, 2.0])
    assert (s.mean, s.std) == (1.0, 1.0)
    assert s.apply(np.array([0.0, 2.0])).tolist() == [-1.0, 1.0]


@given(arrays(float, st.integers(2, 50), elements=st.floats(-1e3, 1e3)))
def test_zscore_roundtrip(x):
    if np.ptp(x) < 1e-6:
        return
    s = fit_zscore(x)
    z = s.apply(x)
    assert np.allclose(s.invert(z), x, rtol=0, atol=1e-12 * max(1.0, np.abs(x).max()))
    assert abs(z.mean()) < 1e-9 and abs(z.std() - 1) < 1e-9
    assert ScalerParams.from_dict(s.to_dict()) == s


def test_lagged_enumeration():
    d = build_lagged([1.0, 2.0, 3.0, 4.0], 2)
    assert d.features.tolist() == [[2.0, 1.0], [3.0, 2.0]]
    assert d.targets.tolist() == [3.0, 4.0]


def test_lagged_boundaries():
    assert len(build_lagged(np.arange(5.0), 4)) == 1
    with pytest.raises(ValueError):
        build_lagged(np.arange(5.0), 0)
    with pytest.raises(InsufficientHistoryError):
        build_lagged(np.arange(5.0), 5)


@given(st.integers(1, 10), st.integers(0, 30))
def test_lagged_no_lookahead(p, extra):
    r = np.arange(p + 1 + extra, dtype=float)
    d = build_lagged(r, p)
    assert len(d) == len(r) - p
    # values equal positions, so features are the indices read
    assert np.all(d.features < d.targets[:, None])
    assert np.array_equal(d.targets, r[d.target_index])


def test_acf_white_noise():
    # pass rate pooled over draws; 3/sqrt(T) covers 99.73% of the null
    rng = np.random.default_rng(0)
    runs = np.array([acf(rng.standard_normal(10_000), 63) for _ in range(50)])
    assert np.all(runs[:, 0] == 1.0)
    assert np.mean(np.abs(runs[:, 1:]) < 3 / math.sqrt(10_000)) >= 0.99


def test_acf_pacf_ar1():
    x = ar1(10_000, 0.8, seed=1)
    assert 0.77 <= acf(x, 5)[1] <= 0.83
    pa = pacf(x, 5)
    assert pa[0] == 1.0
    assert abs(pa[1] - acf(x, 1)[1]) < 1e-12
    assert abs(pa[2]) < 0.03


def test_pacf_cuts_off_for_ar2():
    rng = np.random.default_rng(2)
    e = rng.standard_normal(20_500)
    x = np.zeros_like(e)
    for t in range(2, len(e)):
        x[t] = 0.5 * x[t - 1] - 0.3 * x[t - 2] + e[t]
    pa = pacf(x[500:], 10)
    assert pa[2] == pytest.approx(-0.3, abs=0.03)
    assert np.all(np.abs(pa[3:]) < 0.03)


def test_acf_matches_direct_formula(rng):
    x = rng.standard_normal(40)
    xc = x - x.mean()
    oracle = [np.sum(xc[k:] * xc[: len(x) - k]) / np.sum(xc**2) for k in range(6)]
    assert np.allclose(acf(x, 5), oracle, atol=1e-14)


def test_acf_errors():
    with pytest.raises(ValueError):
        acf(np.ones(10), 3)
    with pytest.raises(ValueError):
        acf(np.arange(5.0), 4)


def test_ci_bounds():
    lo, hi = ci_bounds(2000)
    assert hi == pytest.approx(1.959964 / math.sqrt(2000), rel=1e-6)
    assert lo == -hi


def test_return_series_slice():
    r = ReturnSeries.from_values(np.arange(10.0))
    s = r.slice(2, 5)
    assert s.returns.tolist() == [2.0, 3.0, 4.0]
    assert s.dates[0] == r.dates[2]
