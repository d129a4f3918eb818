"""Grid search of learner hyperparameters over validation folds, then holdout test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistoryError, UndefinedCalmarError, ZeroVolatilityError
from .metrics import BacktestReport, backtest, sharpe, strategy_returns
from .resampling import SplitPlan, SyntheticSplit, member_seed
from .strategies import LearnerSpec, fit, predict
from .timeseries import LaggedDataset, ReturnSeries, build_lagged

UTILITIES = {"sharpe": sharpe}

# a hyperparameter missing on more than this share of folds is dropped
MAX_MISSING_SHARE = 0.5


@dataclass(frozen=True)
class GridResult:
    specs: list
    scores: np.ndarray  # (len(specs), B); NaN marks a missing fold
    perf: np.ndarray
    selected: int
    scheme_name: str
    disqualified: list = field(default_factory=list)
    p: int = 252
    seed: int = 0

    @property
    def best(self) -> LearnerSpec:
        return self.specs[self.selected]

    def to_dict(self):
        nan_to_none = lambda a: [None if not math.isfinite(v) else float(v) for v in a]
        return {
            "scheme": self.scheme_name,
            "p": self.p,
            "seed": self.seed,
            "grid": [{"kind": s.kind, "hyperparams": s.hyperparams} for s in self.specs],
            "scores": [nan_to_none(row) for row in self.scores],
            "perf": nan_to_none(self.perf),
            "selected": self.selected,
            "selected_hyperparams": self.best.hyperparams,
            "disqualified": self.disqualified,
        }


def _folds(scheme, in_sample, p):
    """Materialise ``(train, val)`` lag datasets for every fold of a scheme."""
    if isinstance(scheme, SplitPlan):
        data = build_lagged(in_sample, p)
        n = len(data)
        for tr, va in scheme.folds:
            if len(tr) and tr.max() >= n or len(va) and va.max() >= n:
                raise InsufficientHistoryError(f"{scheme.scheme_name} plan indexes past the {n} lagged rows")
            yield data.subset(tr), data.subset(va)
        return
    for split in scheme:
        if not isinstance(split, SyntheticSplit):
            raise TypeError(f"unsupported fold type {type(split).__name__}")
        data = build_lagged(split.path, p)
        cut = len(split.path) - split.h
        train = data.target_index < cut
        if train.sum() == 0 or train.all():
            raise InsufficientHistoryError("synthetic split leaves an empty train or validation set")
        yield data.subset(np.flatnonzero(train)), data.subset(np.flatnonzero(~train))


def _score(spec, train, val, utility, seed):
    model = fit(spec, train, seed=seed)
    try:
        return utility(strategy_returns(val.targets, predict(model, val.features)))
    except (ZeroVolatilityError, UndefinedCalmarError):
        return float("nan")


def grid_search(scheme, grid, in_sample, p=252, utility="sharpe", seed=0, scheme_name=None) -> GridResult:
    """Score every grid point on every fold and pick the best mean utility.

    ``scheme`` is a :class:`SplitPlan` over the rows of the in-sample lag
    matrix, or an iterable of :class:`SyntheticSplit` paths. Folds where the
    utility is undefined are recorded as NaN; ties go to the earlier grid
    entry.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    util = UTILITIES[utility] if isinstance(utility, str) else utility
    if scheme_name is None:
        scheme_name = scheme.scheme_name if isinstance(scheme, SplitPlan) else "resampled"
    columns = []
    for b, (train, val) in enumerate(_folds(scheme, in_sample, p)):
        columns.append([_score(spec, train, val, util, member_seed(seed, b, i)) for i, spec in enumerate(grid)])
    if not columns:
        raise InsufficientHistoryError("scheme produced no folds")
    scores = np.array(columns, dtype=float).T
    missing = np.isnan(scores).mean(axis=1)
    with np.errstate(invalid="ignore"):
        perf = np.array([np.nanmean(row) if not np.all(np.isnan(row)) else np.nan for row in scores])
    disq = [i for i in range(len(grid)) if missing[i] > MAX_MISSING_SHARE]
    eligible = np.where(np.isin(np.arange(len(grid)), disq) | np.isnan(perf), -np.inf, perf)
    if np.all(np.isneginf(eligible)):
        raise ValueError(f"{scheme_name}: every hyperparameter setting was disqualified")
    return GridResult(grid, scores, perf, int(np.argmax(eligible)), scheme_name, disq, p, seed)


def holdout_dataset(in_sample, holdout, p) -> LaggedDataset:
    """Lag rows whose targets are exactly the holdout returns.

    The first rows borrow their lags from the tail of the in-sample series.
    """
    r_in = np.asarray(getattr(in_sample, "returns", in_sample), dtype=float)
    r_out = np.asarray(getattr(holdout, "returns", holdout), dtype=float)
    if len(r_in) < p:
        raise InsufficientHistoryError("in-sample shorter than the lag window")
    if isinstance(in_sample, ReturnSeries) and isinstance(holdout, ReturnSeries) and len(holdout):
        if not in_sample.dates[-1] < holdout.dates[0]:
            raise ValueError("holdout must start strictly after the in-sample period")
    return build_lagged(np.concatenate([r_in[-p:], r_out]), p)


def finalize_and_test(result: GridResult, in_sample, holdout, seed=None, strict=True) -> BacktestReport:
    """Refit the selected setting on the full real in-sample series and test on the holdout.

    With ``strict=False`` undefined ratios are reported as NaN instead of raising.
    """
    p = result.p
    model = fit(result.best, build_lagged(in_sample, p), seed=result.seed if seed is None else seed)
    data = holdout_dataset(in_sample, holdout, p)
    return backtest(data.targets, predict(model, data.features), strict=strict)
