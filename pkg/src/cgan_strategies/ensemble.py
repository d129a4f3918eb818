"""Bagged ensembles of base learners trained on resampled return paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScaleError
from .resampling import member_seed, stationary_bootstrap
from .strategies import FittedModel, LearnerSpec, fit, predict
from .timeseries import build_lagged

RESAMPLERS = ("stat_boot", "cgan_small", "cgan_medium", "cgan_large")


class MemberError(RuntimeError):
    def __init__(self, index, cause):
        super().__init__(f"ensemble member {index} failed: {cause}")
        self.index = index


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple
    resampler: str
    spec: LearnerSpec
    p: int
    seed: int
    aggregation: str = "mean"

    def __len__(self):
        return len(self.members)

    def predict(self, features):
        return ensemble_predict(self, features)

    def prefix(self, B):
        """The ensemble made of the first ``B`` members."""
        return EnsembleModel(self.members[:B], self.resampler, self.spec, self.p, self.seed, self.aggregation)


def resample_path(resampler, in_sample, b, seed, cgan_model=None, expected_block=20):
    """Draw the ``b``-th training path for a resampler.

    ``resampler`` is a name from :data:`RESAMPLERS` or a callable
    ``(returns, member_seed) -> path``.
    """
    r = np.asarray(getattr(in_sample, "returns", in_sample), dtype=float)
    s = member_seed(seed, b)
    if callable(resampler):
        return np.asarray(resampler(r, s), dtype=float)
    if resampler == "stat_boot":
        return r[stationary_bootstrap(len(r), expected_block, s).indices]
    if resampler.startswith("cgan"):
        if cgan_model is None:
            raise ValueError(f"resampler {resampler!r} needs a trained cGAN model")
        from .cgan import sample_path

        return sample_path(cgan_model, r, "recursive", seed=s)
    raise ValueError(f"unknown resampler {resampler!r}")


def build_ensemble(resampler, base_spec: LearnerSpec, in_sample, B, seed=0, p=252,
                   cgan_model=None, expected_block=20) -> EnsembleModel:
    """Fit ``B`` copies of ``base_spec``, each on its own resampled in-sample path.

    Member ``b`` depends only on ``(seed, b)``, so a smaller ensemble is a
    prefix of a larger one built with the same seed.
    """
    members = []
    for b in range(B):
        try:
            path = resample_path(resampler, in_sample, b, seed, cgan_model, expected_block)
            members.append(fit(base_spec, build_lagged(path, p), seed=member_seed(seed, b, 1)))
        except Exception as exc:
            raise MemberError(b, exc) from exc
    name = resampler if isinstance(resampler, str) else getattr(resampler, "__name__", "custom")
    return EnsembleModel(tuple(members), name, base_spec, p, seed)


def member_predictions(ensemble, features):
    """``(B, n)`` matrix of member predictions."""
    members = ensemble.members if isinstance(ensemble, EnsembleModel) else ensemble
    return np.vstack([predict(m, features) for m in members])


def ensemble_predict(ensemble, features):
    return member_predictions(ensemble, features).mean(axis=0)


def incremental_predictions(ensemble, features):
    """Row ``b`` holds the prediction of the first ``b + 1`` members."""
    M = member_predictions(ensemble, features)
    return np.cumsum(M, axis=0) / np.arange(1, len(M) + 1)[:, None]


@dataclass(frozen=True)
class VarianceDecomposition:
    avg_variance: float
    avg_correlation: float
    ensemble_variance: float
    covariance_identity: float
    equicorrelation_approx: float
    max_member_variance: float


def variance_decomposition(member_preds) -> VarianceDecomposition:
    """Variance of the averaged prediction and its covariance decomposition.

    Variances and covariances are taken across prediction points with a 1/n
    normalisation. ``covariance_identity`` rebuilds the ensemble variance from
    member variances and pairwise covariances; ``equicorrelation_approx`` is
    the equal-variance, equal-correlation simplification.
    """
    M = np.asarray(member_preds, dtype=float)
    B, n = M.shape
    if B < 2 or n < 2:
        raise ValueError("need at least 2 members and 2 prediction points")
    C = np.cov(M, bias=True)
    var = np.diag(C)
    if np.any(var <= 0):
        raise DegenerateScaleError("a member has zero prediction variance")
    sd = np.sqrt(var)
    iu = np.triu_indices(B, k=1)
    rho = float(np.mean((C / np.outer(sd, sd))[iu]))
    sigma2 = float(var.mean())
    identity = float((var.sum() + 2.0 * C[iu].sum()) / B**2)
    return VarianceDecomposition(
        avg_variance=sigma2,
        avg_correlation=rho,
        ensemble_variance=float(np.var(M.mean(axis=0))),
        covariance_identity=identity,
        equicorrelation_approx=sigma2 * (1.0 / B + (B - 1) / B * rho),
        max_member_variance=float(var.max()),
    )
