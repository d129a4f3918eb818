"""Exception types raised across the package."""


class InsufficientHistoryError(ValueError):
    """Series too short for the requested lags, splits or horizon."""


class DegenerateScaleError(ValueError):
    """A scale or correlation is undefined because the input has no variance."""


class ShapeMismatchError(ValueError):
    """Array shapes do not line up."""


class ZeroVolatilityError(ValueError):
    """Sharpe-type ratio requested on returns with zero dispersion."""


class UndefinedCalmarError(ValueError):
    """Calmar ratio requested on a path without any drawdown."""


class TrainingDivergenceError(RuntimeError):
    """Non-finite gradients or parameters appeared during training."""

    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch
