"""cGAN resampling of return series for strategy fine-tuning and bagged ensembles."""

from .cgan import CganConfig, CganModel, sample_path, sample_rmse, train_and_select
from .config import ExperimentConfig, load_config
from .ensemble import build_ensemble, ensemble_predict, variance_decomposition
from .errors import (
    DegenerateScaleError, InsufficientHistoryError, ShapeMismatchError, TrainingDivergenceError,
    UndefinedCalmarError, ZeroVolatilityError,
)
from .finetune import finalize_and_test, grid_search
from .metrics import backtest, calmar, max_drawdown, sharpe
from .resampling import (
    SplitPlan, split_block, split_hv_block, split_kfold, split_naive, split_one_split,
    split_sliding, stationary_bootstrap,
)
from .stats import friedman_test, holm_correction, rank_table, robust_summary, wilcoxon_rank_sum
from .strategies import LearnerSpec, expand_grid, fit, predict
from .timeseries import LaggedDataset, PriceSeries, ReturnSeries, acf, build_lagged, pacf

__version__ = "0.1.0"
