"""Return series ingestion, scaling, lag matrices and correlation diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .errors import DegenerateScaleError, InsufficientHistoryError, ShapeMismatchError

TRADING_DAYS = 252


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PriceSeries:
    dates: np.ndarray
    prices: np.ndarray
    benchmark_rate: np.ndarray | None = None

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        prices = _frozen(self.prices)
        if dates.shape != prices.shape or dates.ndim != 1:
            raise ShapeMismatchError("dates and prices must be 1-D and of equal length")
        if len(dates) > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            bad = int(np.argmax(np.diff(dates) <= np.timedelta64(0, "D"))) + 1
            raise ValueError(f"dates not strictly increasing at {dates[bad]}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        if self.benchmark_rate is not None:
            rate = _frozen(self.benchmark_rate)
            if rate.shape != prices.shape:
                raise ShapeMismatchError("benchmark_rate must be aligned 1:1 with dates")
            object.__setattr__(self, "benchmark_rate", rate)

    def __len__(self):
        return len(self.prices)


@dataclass(frozen=True)
class ReturnSeries:
    """Dated daily excess log returns."""

    dates: np.ndarray
    returns: np.ndarray

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        returns = _frozen(self.returns)
        if dates.shape != returns.shape or returns.ndim != 1:
            raise ShapeMismatchError("dates and returns must be 1-D and of equal length")
        if not np.all(np.isfinite(returns)):
            raise ValueError("returns must be finite")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "returns", returns)

    def __len__(self):
        return len(self.returns)

    @classmethod
    def from_values(cls, values, start="2000-01-03"):
        """Wrap a bare vector, stamping it with consecutive business days."""
        values = np.asarray(values, dtype=float)
        dates = np.busday_offset(np.datetime64(start, "D"), np.arange(len(values)), roll="forward")
        return cls(dates, values)

    def slice(self, start=None, stop=None):
        return ReturnSeries(self.dates[start:stop], self.returns[start:stop])


def compute_excess_log_returns(prices: PriceSeries) -> ReturnSeries:
    """Daily log returns net of the benchmark leg.

    ``r[t] = ln(p[t+1] / p[t]) - rate[t] / 252``; without a benchmark the plain
    log return is returned. The return is stamped with the date it is realized.
    """
    p = prices.prices
    if len(p) < 2:
        raise InsufficientHistoryError("need at least 2 prices to form a return")
    bad = ~np.isfinite(p) | (p <= 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"invalid price {p[i]!r} on {prices.dates[i]}")
    r = np.diff(np.log(p))
    if prices.benchmark_rate is not None:
        rate = prices.benchmark_rate[:-1]
        if not np.all(np.isfinite(rate)):
            i = int(np.argmax(~np.isfinite(rate)))
            raise ValueError(f"missing benchmark rate on {prices.dates[i]}")
        r = r - rate / TRADING_DAYS
    return ReturnSeries(prices.dates[1:], r)


def read_price_csv(path) -> PriceSeries:
    """Read a ``date,price[,rate]`` CSV. Empty cells are rejected, not filled."""
    dates, prices, rates = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in reader.fieldnames or []]
        if cols[:2] != ["date", "price"]:
            raise ValueError(f"{path}: expected header date,price[,rate], got {cols}")
        has_rate = "rate" in cols
        for line, row in enumerate(reader, start=2):
            row = {k.strip(): (v or "").strip() for k, v in row.items()}
            if not row["price"]:
                raise ValueError(f"{path}:{line}: missing price on {row['date']}")
            dates.append(row["date"])
            prices.append(float(row["price"]))
            if has_rate:
                if not row["rate"]:
                    raise ValueError(f"{path}:{line}: missing rate on {row['date']}")
                rates.append(float(row["rate"]))
    return PriceSeries(np.array(dates, dtype="datetime64[D]"), prices, rates if has_rate else None)


def write_returns_csv(series: ReturnSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "return"])
        for d, r in zip(series.dates, series.returns):
            w.writerow([str(d), repr(float(r))])


def read_returns_csv(path) -> ReturnSeries:
    dates, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames][:2] != ["date", "return"]:
            raise ValueError(f"{path}: expected header date,return")
        for row in reader:
            dates.append(row["date"].strip())
            values.append(float(row["return"]))
    return ReturnSeries(np.array(dates, dtype="datetime64[D]"), values)


def load_returns(path) -> ReturnSeries:
    """Load either a returns CSV or a price CSV (converted to excess returns)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:2] == ["date", "return"]:
        return read_returns_csv(path)
    return compute_excess_log_returns(read_price_csv(Path(path)))


@dataclass(frozen=True)
class ScalerParams:
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0 and math.isfinite(self.std)):
            raise DegenerateScaleError(f"scale must be positive, got {self.std}")

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean, "std": self.std}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["mean"]), float(d["std"]))


def fit_zscore(values) -> ScalerParams:
    """Z-score parameters using the population (1/N) standard deviation."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise DegenerateScaleError("need at least 2 values to fit a scale")
    std = float(v.std())
    mean = float(v.mean())
    if std <= 1e-15 * max(1.0, abs(mean)):
        raise DegenerateScaleError("cannot z-score a constant vector")
    return ScalerParams(mean, std)


@dataclass(frozen=True)
class LaggedDataset:
    """Supervised view of a series: row i predicts ``r[p + i]`` from its p lags.

    ``features[i, j] = r[p + i - 1 - j]`` (most recent lag first).
    """

    features: np.ndarray
    targets: np.ndarray
    p: int
    target_index: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.targets)

    def subset(self, rows):
        rows = np.asarray(rows, dtype=int)
        return LaggedDataset(self.features[rows], self.targets[rows], self.p, self.target_index[rows])


def build_lagged(returns, p: int) -> LaggedDataset:
    r = np.asarray(getattr(returns, "returns", returns), dtype=float)
    if p < 1:
        raise ValueError("lag count p must be >= 1")
    if len(r) <= p:
        raise InsufficientHistoryError(f"series of length {len(r)} too short for p={p}")
    windows = sliding_window_view(r, p)[:-1]
    features = _frozen(windows[:, ::-1])
    targets = _frozen(r[p:])
    return LaggedDataset(features, targets, p, _frozen(np.arange(p, len(r)), int))


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag with the biased (1/T) estimator."""
    x = np.asarray(getattr(series, "returns", series), dtype=float)
    T = len(x)
    if T <= max_lag + 1:
        raise InsufficientHistoryError(f"need T > max_lag + 1 (T={T}, max_lag={max_lag})")
    d = x - x.mean()
    c0 = d @ d / T
    if c0 <= 0:
        raise DegenerateScaleError("autocorrelation undefined for a constant series")
    out = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = d[: T - k] @ d[k:] / T / c0
    return out


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 0..max_lag via Durbin-Levinson.

    Entry 0 is 1 by convention.
    """
    rho = acf(series, max_lag)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(max_lag + 1)
    v = 1.0
    for k in range(1, max_lag + 1):
        num = rho[k] - phi[1:k] @ rho[k - 1 : 0 : -1]
        a = num / v
        prev = phi[1:k].copy()
        phi[1:k] = prev - a * prev[::-1]
        phi[k] = a
        v *= 1.0 - a * a
        out[k] = a
    return out


def ci_bounds(T: int, level: float = 0.95) -> tuple[float, float]:
    """White-noise confidence band for sample autocorrelations."""
    z = stats.norm.ppf(0.5 + level / 2.0)
    half = z / math.sqrt(T)
    return -half, half
