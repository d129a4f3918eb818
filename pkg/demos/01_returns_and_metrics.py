"""
Returns, lag matrices and backtest metrics
==========================================

Start from a simulated price series with a benchmark rate, turn it into excess
log returns and score a naive one-lag momentum signal.
"""

import numpy as np

from cgan_strategies import PriceSeries, acf, backtest, build_lagged, pacf
from cgan_strategies.metrics import vol_scale
from cgan_strategies.timeseries import ci_bounds, compute_excess_log_returns

rng = np.random.default_rng(0)
T = 1500

# AR(1) log returns with a little positive drift, compounded into prices
r = np.zeros(T)
for t in range(1, T):
    r[t] = 0.0002 + 0.15 * r[t - 1] + 0.01 * rng.standard_normal()
prices = PriceSeries(
    dates=np.busday_offset("2015-01-01", np.arange(T + 1), roll="forward"),
    prices=100 * np.exp(np.concatenate([[0.0], np.cumsum(r)])),
    benchmark_rate=np.full(T + 1, 0.02),
)
returns = compute_excess_log_returns(prices)
print(f"{len(returns)} excess returns from {returns.dates[0]} to {returns.dates[-1]}")

# Autocorrelation structure, with the white-noise band
lo, hi = ci_bounds(len(returns))
print("ACF  lags 1-5:", np.round(acf(returns.returns, 5)[1:], 3), f"band ±{hi:.3f}")
print("PACF lags 1-5:", np.round(pacf(returns.returns, 5)[1:], 3))

# Each row of the lag matrix holds the p previous returns, most recent first
data = build_lagged(returns, p=5)
print("lag matrix", data.features.shape, "first row", np.round(data.features[0], 4))

# Momentum: the position is yesterday's return
scaled = vol_scale(returns.returns, 0.10)
rep = backtest(scaled[1:], scaled[:-1])
print(f"momentum  Sharpe {rep.sharpe:.3f}  Calmar {rep.calmar:.3f}  MDD {rep.mdd:.4f}  RMSE {rep.rmse:.5f}")

# Perfect foresight earns r**2 every day, so the drawdown is zero and Calmar is undefined
oracle = backtest(scaled, scaled)
print(f"foresight Sharpe {oracle.sharpe:.1f}  MDD {oracle.mdd}  Calmar {oracle.calmar}")
