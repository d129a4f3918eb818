"""Backtest metrics for an identity-signal trading strategy on log returns.

Conventions: 252 periods per year, population standard deviation, and
cumulative paths formed by summing log returns (no compounding).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, UndefinedCalmarError, ZeroVolatilityError

PERIODS_PER_YEAR = 252

REPORT_COLUMNS = ["asset", "scheme", "strategy", "B", "sharpe", "calmar", "mdd", "rmse"]


def _vec(x):
    return np.asarray(x, dtype=float).ravel()


def strategy_returns(actual, predicted):
    """Identity signal: position equals the predicted return."""
    a, p = _vec(actual), _vec(predicted)
    if a.shape != p.shape:
        raise ShapeMismatchError(f"actual has {a.size} points, predicted {p.size}")
    return a * p


def annualized_mean(returns):
    return float(np.mean(_vec(returns))) * PERIODS_PER_YEAR


def annualized_vol(returns):
    return float(np.std(_vec(returns))) * math.sqrt(PERIODS_PER_YEAR)


def sharpe(returns):
    r = _vec(returns)
    if r.size < 2:
        raise ZeroVolatilityError("Sharpe ratio needs at least 2 returns")
    vol = annualized_vol(r)
    if vol <= 1e-15 * max(1.0, float(np.max(np.abs(r)))):
        raise ZeroVolatilityError("Sharpe ratio undefined for zero-volatility returns")
    return annualized_mean(r) / vol


def cumulative_returns(returns):
    return np.cumsum(_vec(returns))


def max_drawdown(returns):
    """Most negative gap between the cumulative path and its running peak.

    The peak includes the starting level 0, so a first-period loss counts.
    """
    r = _vec(returns)
    if r.size == 0:
        raise ValueError("max drawdown of an empty series")
    cum = np.concatenate([[0.0], np.cumsum(r)])
    return float(np.min(cum - np.maximum.accumulate(cum)))


def calmar(returns):
    mdd = max_drawdown(returns)
    if mdd >= 0:
        raise UndefinedCalmarError("Calmar ratio undefined without a drawdown")
    return annualized_mean(returns) / -mdd


def rmse(actual, predicted):
    a, p = _vec(actual), _vec(predicted)
    if a.shape != p.shape or a.size == 0:
        raise ShapeMismatchError("rmse needs equal, non-empty vectors")
    return float(np.sqrt(np.mean((a - p) ** 2)))


def vol_scale(returns, target_vol=0.10):
    """Rescale returns to a target annualized volatility."""
    r = _vec(returns)
    vol = annualized_vol(r)
    if vol == 0:
        raise ZeroVolatilityError("cannot volatility-scale a zero-volatility series")
    return r * (target_vol / vol)


@dataclass(frozen=True)
class BacktestReport:
    sharpe: float
    calmar: float
    mdd: float
    rmse: float
    strat_returns: np.ndarray
    cum_returns: np.ndarray

    def summary(self):
        return {"sharpe": self.sharpe, "calmar": self.calmar, "mdd": self.mdd, "rmse": self.rmse}

    def to_json(self, **labels):
        d = {**labels, **self.summary(),
             "strat_returns": self.strat_returns.tolist(), "cum_returns": self.cum_returns.tolist()}
        return json.dumps(d, allow_nan=True)

    def csv_row(self, asset="", scheme="", strategy="", B=""):
        return [asset, scheme, strategy, B] + [_fmt(v) for v in (self.sharpe, self.calmar, self.mdd, self.rmse)]


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def _or_nan(fn, x):
    try:
        return fn(x)
    except (ZeroVolatilityError, UndefinedCalmarError):
        return float("nan")


def backtest(actual, predicted, strict=False) -> BacktestReport:
    """Evaluate predictions as an identity-signal strategy.

    Undefined ratios become NaN unless ``strict`` is set.
    """
    sr = strategy_returns(actual, predicted)
    wrap = (lambda fn, x: fn(x)) if strict else _or_nan
    return BacktestReport(
        sharpe=wrap(sharpe, sr),
        calmar=wrap(calmar, sr),
        mdd=max_drawdown(sr),
        rmse=rmse(actual, predicted),
        strat_returns=sr,
        cum_returns=np.cumsum(sr),
    )


def reports_to_csv(rows) -> str:
    """Render ``(labels, report)`` pairs as CSV text with :data:`REPORT_COLUMNS`."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for labels, rep in rows:
        w.writerow(rep.csv_row(**labels))
    return buf.getvalue()
