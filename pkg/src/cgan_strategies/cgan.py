"""Conditional GAN for univariate return series.

The generator maps ``[lags, noise]`` to the next return and the discriminator
scores ``[candidate, lags]``. Both are one-hidden-layer MLPs trained with
alternating minibatch SGD; every ``snap`` iterations the pair is frozen and
scored by the RMSE of teacher-forced samples against the training series. The
lowest-RMSE snapshot is kept for sampling.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InsufficientHistoryError, TrainingDivergenceError
from .neuralnet import MlpNet, SgdConfig, backward, forward, init_mlp, sgd_step
from .timeseries import ReturnSeries, ScalerParams, build_lagged, fit_zscore

log = logging.getLogger(__name__)

SIZE_NEURONS = {"small": 5, "medium": 100, "large": 500}


@dataclass(frozen=True)
class CganConfig:
    p: int = 252
    noise_dim: int = 252
    gen_hidden: int = 100
    disc_hidden: int = 100
    epochs: int = 20000
    batch_size: int = 252
    snap: int = 200
    eval_samples: int = 50
    learning_rate: float = 0.01

    def __post_init__(self):
        for name in ("p", "noise_dim", "gen_hidden", "disc_hidden", "epochs", "batch_size", "snap", "eval_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.snap > self.epochs:
            raise ValueError("snap must not exceed epochs (no snapshot would be taken)")

    @classmethod
    def for_size(cls, size, **overrides):
        n = SIZE_NEURONS[size]
        return cls(**{"gen_hidden": n, "disc_hidden": n, **overrides})

    @property
    def sgd(self):
        return SgdConfig(self.learning_rate, self.batch_size, self.epochs)


@dataclass(frozen=True)
class GeneratorSnapshot:
    generator: MlpNet
    discriminator: MlpNet
    epoch: int
    rmse: float
    feature_scaler: ScalerParams
    target_scaler: ScalerParams

    def to_dict(self):
        return {
            "generator": self.generator.to_dict(),
            "discriminator": self.discriminator.to_dict(),
            "epoch": self.epoch,
            "rmse": self.rmse,
            "feature_scaler": self.feature_scaler.to_dict(),
            "target_scaler": self.target_scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            MlpNet.from_dict(d["generator"]),
            MlpNet.from_dict(d["discriminator"]),
            int(d["epoch"]),
            float(d["rmse"]),
            ScalerParams.from_dict(d["feature_scaler"]),
            ScalerParams.from_dict(d["target_scaler"]),
        )


@dataclass(frozen=True)
class CganModel:
    selected: GeneratorSnapshot
    rmse_curve: list
    config: CganConfig
    seed: int
    history: list = field(default_factory=list, repr=False)

    @property
    def p(self):
        return self.config.p

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "generator.json", "w") as fh:
            json.dump(self.selected.to_dict(), fh)
        sidecar = {
            "config": asdict(self.config),
            "seed": self.seed,
            "selected_epoch": self.selected.epoch,
            "rmse_curve": [[int(e), float(r)] for e, r in self.rmse_curve],
            "history": self.history,
        }
        with open(directory / "model.json", "w") as fh:
            json.dump(sidecar, fh, indent=1)

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        with open(directory / "generator.json") as fh:
            snap = GeneratorSnapshot.from_dict(json.load(fh))
        with open(directory / "model.json") as fh:
            side = json.load(fh)
        curve = [(int(e), float(r)) for e, r in side["rmse_curve"]]
        return cls(snap, curve, CganConfig(**side["config"]), int(side["seed"]), side.get("history", []))


def _streams(seed):
    init, train, evaluate = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(init), np.random.default_rng(train), evaluate


def _fit_scalers(r, p):
    return fit_zscore(r[:-1]), fit_zscore(r[p:])


def train_and_select(returns, config: CganConfig = CganConfig(), seed: int = 0, on_snapshot=None) -> CganModel:
    """Train a cGAN on ``returns`` and keep the snapshot with the lowest sample RMSE.

    ``on_snapshot``, if given, is called with every scored snapshot.
    """
    r = np.asarray(getattr(returns, "returns", returns), dtype=float)
    p, L = config.p, config.batch_size
    if len(r) <= p + 1:
        raise InsufficientHistoryError(f"series of length {len(r)} too short for p={p}")
    feat_scaler, tgt_scaler = _fit_scalers(r, p)
    data = build_lagged(r, p)
    V = feat_scaler.apply(data.features)
    Y = tgt_scaler.apply(data.targets)[:, None]
    n = len(Y)

    init_rng, rng, eval_seq = _streams(seed)
    G = init_mlp([p + config.noise_dim, config.gen_hidden, 1], init_rng, "relu", "linear")
    D = init_mlp([1 + p, config.disc_hidden, 1], init_rng, "relu", "sigmoid")
    sgd = config.sgd

    curve, history = [], []
    best = None
    for epoch in range(1, config.epochs + 1):
        idx = rng.integers(0, n, size=L)
        v = V[idx]
        z = rng.standard_normal((L, config.noise_dim))
        fake = forward(G, np.hstack([v, z]))[-1]

        # discriminator: ascend mean[log D(real) + log(1 - D(fake))]
        acts_real = forward(D, np.hstack([Y[idx], v]))
        acts_fake = forward(D, np.hstack([fake, v]))
        d_real, d_fake = acts_real[-1], acts_fake[-1]
        g_real, _ = backward(D, acts_real, -1.0 / (L * d_real))
        g_fake, _ = backward(D, acts_fake, 1.0 / (L * (1.0 - d_fake)))
        D = sgd_step(D, [(a + c, b + d) for (a, b), (c, d) in zip(g_real, g_fake)], sgd, epoch)

        # generator: ascend mean[log D(G(z | v))]
        z = rng.standard_normal((L, config.noise_dim))
        acts_g = forward(G, np.hstack([v, z]))
        acts_d = forward(D, np.hstack([acts_g[-1], v]))
        _, dx = backward(D, acts_d, -1.0 / (L * acts_d[-1]))
        g_grads, _ = backward(G, acts_g, dx[:, :1])
        G = sgd_step(G, g_grads, sgd, epoch)

        if epoch % config.snap == 0:
            snap = GeneratorSnapshot(G, D, epoch, np.nan, feat_scaler, tgt_scaler)
            eval_rng = np.random.default_rng(eval_seq.spawn(1)[0])
            rmse = _rmse_over_samples(snap, r, p, config.eval_samples, eval_rng)
            if not np.isfinite(rmse):
                raise TrainingDivergenceError("non-finite sample RMSE", epoch)
            snap = replace(snap, rmse=rmse)
            curve.append((epoch, rmse))
            history.append({
                "epoch": epoch,
                "rmse": rmse,
                "d_real": float(d_real.mean()),
                "d_fake": float(d_fake.mean()),
            })
            log.debug("epoch %d rmse %.6g D(real) %.3f D(fake) %.3f", epoch, rmse, d_real.mean(), d_fake.mean())
            if on_snapshot is not None:
                on_snapshot(snap)
            if best is None or rmse < best.rmse:
                best = snap
    return CganModel(best, curve, config, seed, history)


def _generate(snap: GeneratorSnapshot, window, noise, recursive):
    """Draw one path of ``len(noise)`` values.

    ``window`` holds the real lag matrix (teacher forcing) or the initial p
    raw values (recursive). Output is in return units.
    """
    G = snap.generator
    W1, b1 = G.weights[0], G.biases[0]
    p = W1.shape[0] - noise.shape[1]
    noise_part = noise @ W1[p:] + b1
    if not recursive:
        h = np.maximum(snap.feature_scaler.apply(window) @ W1[:p] + noise_part, 0.0)
        return snap.target_scaler.invert((h @ G.weights[1] + G.biases[1])[:, 0])
    out = np.empty(len(noise))
    lags = list(snap.feature_scaler.apply(window[::-1]))  # most recent first
    Wv, W2, b2 = W1[:p], G.weights[1][:, 0], G.biases[1][0]
    fs, ts = snap.feature_scaler, snap.target_scaler
    buf = np.array(lags)
    for t in range(len(noise)):
        h = np.maximum(buf @ Wv + noise_part[t], 0.0)
        y = (h @ W2 + b2) * ts.std + ts.mean
        out[t] = y
        buf[1:] = buf[:-1]
        buf[0] = (y - fs.mean) / fs.std
    return out


def sample_path(model, conditioning, mode="recursive", seed=0, length=None):
    """Sample one synthetic path from the selected generator.

    ``teacher_forced`` conditions every draw on the real lags of
    ``conditioning`` and returns ``T - p`` values aligned with
    ``conditioning[p:]``. ``recursive`` seeds the lag window with the first p
    real values and thereafter feeds generated values back in; it returns
    ``length`` values (default ``T - p``).
    """
    snap = model.selected if isinstance(model, CganModel) else model
    p, nd = _dims(snap)
    r = np.asarray(getattr(conditioning, "returns", conditioning), dtype=float)
    if len(r) < p:
        raise InsufficientHistoryError(f"conditioning needs at least p={p} values")
    rng = np.random.default_rng(seed)
    if mode == "teacher_forced":
        if len(r) <= p:
            raise InsufficientHistoryError("teacher forcing needs more than p values")
        if length is not None and length != len(r) - p:
            raise ValueError("teacher-forced length is fixed at T - p")
        data = build_lagged(r, p)
        noise = rng.standard_normal((len(data), nd))
        return _generate(snap, data.features, noise, recursive=False)
    if mode == "recursive":
        n = len(r) - p if length is None else int(length)
        if n < 1:
            raise ValueError("recursive path length must be positive")
        noise = rng.standard_normal((n, nd))
        return _generate(snap, r[:p], noise, recursive=True)
    raise ValueError(f"unknown sampling mode {mode!r}")


def _dims(snap):
    """(p, noise_dim) of a snapshot."""
    p = snap.discriminator.weights[0].shape[0] - 1
    return p, snap.generator.weights[0].shape[0] - p


def _path_rmse(y, y_star):
    # sum over T - p terms divided by T - p - 1
    return float(np.sqrt(np.sum((y - y_star) ** 2) / (len(y) - 1)))


def _rmse_over_samples(snap, r, p, C, rng):
    data = build_lagged(r, p)
    nd = _dims(snap)[1]
    total = 0.0
    for _ in range(C):
        y_star = _generate(snap, data.features, rng.standard_normal((len(data), nd)), recursive=False)
        total += _path_rmse(data.targets, y_star)
    return total / C


def sample_rmse(model, returns, C=50, seed=0) -> float:
    """Mean teacher-forced sample RMSE over ``C`` draws."""
    snap = model.selected if isinstance(model, CganModel) else model
    r = np.asarray(getattr(returns, "returns", returns), dtype=float)
    p = _dims(snap)[0]
    if len(r) <= p + 1:
        raise InsufficientHistoryError("need at least p + 2 observations")
    return _rmse_over_samples(snap, r, p, C, np.random.default_rng(seed))


def sample_series(model, conditioning: ReturnSeries, seed=0, mode="recursive") -> ReturnSeries:
    """Synthetic path dated like ``conditioning[p:]``."""
    path = sample_path(model, conditioning, mode=mode, seed=seed)
    return ReturnSeries(conditioning.dates[len(conditioning) - len(path):], path)
