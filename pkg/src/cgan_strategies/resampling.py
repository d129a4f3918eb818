"""Stationary bootstrap and train/validation splitters for time series.

Classical splitters return a :class:`SplitPlan` whose indices address the rows
of whatever sequence they were built for (in practice the rows of an in-sample
lag matrix). Generative schemes (stationary bootstrap, cGAN) instead produce
whole synthetic paths that are one-split at ``len - h``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistoryError


def member_seed(master, *key) -> int:
    """Counter-based child seed: member ``b`` of ``B`` does not depend on ``B``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SplitPlan:
    folds: list
    scheme_name: str
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.folds)

    def to_dict(self):
        return {
            "scheme": self.scheme_name,
            "params": self.params,
            "folds": [{"train": tr.tolist(), "val": va.tolist()} for tr, va in self.folds],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        folds = [(np.asarray(f["train"], dtype=int), np.asarray(f["val"], dtype=int)) for f in d["folds"]]
        return cls(folds, d["scheme"], dict(d["params"]))


def _check(T, **params):
    if T < 2:
        raise InsufficientHistoryError(f"need at least 2 observations, got {T}")
    for k, v in params.items():
        if v < 1:
            raise ValueError(f"{k} must be positive, got {v}")


def split_naive(T) -> SplitPlan:
    _check(T)
    idx = np.arange(T)
    return SplitPlan([(idx, idx.copy())], "naive", {})


def split_one_split(T, h) -> SplitPlan:
    _check(T, h=h)
    if h >= T:
        raise InsufficientHistoryError(f"holdout h={h} must be smaller than T={T}")
    return SplitPlan([(np.arange(T - h), np.arange(T - h, T))], "one_split", {"h": h})


def split_sliding(T, window, stride) -> SplitPlan:
    """Train on ``[s, s + window)``, validate on the next ``stride`` points.

    ``floor((T - window) / stride)`` folds; any leftover tail is unused.
    """
    _check(T, window=window, stride=stride)
    n = (T - window) // stride
    if n < 1:
        raise InsufficientHistoryError(f"T={T} too short for window={window}, stride={stride}")
    folds = []
    for j in range(n):
        s = j * stride
        folds.append((np.arange(s, s + window), np.arange(s + window, s + window + stride)))
    return SplitPlan(folds, "sliding", {"window": window, "stride": stride})


def _blocks(T, starts_stops, gap, name, params):
    folds = []
    for lo, hi in starts_stops:
        idx = np.arange(T)
        train = idx[(idx < lo - gap) | (idx >= hi + gap)]
        if len(train) == 0:
            raise InsufficientHistoryError(f"{name}: empty training set for block [{lo}, {hi})")
        folds.append((train, np.arange(lo, hi)))
    return SplitPlan(folds, name, params)


def split_kfold(T, k) -> SplitPlan:
    """k contiguous folds of near-equal size (no shuffling)."""
    _check(T, k=k)
    if k > T:
        raise InsufficientHistoryError(f"k={k} exceeds T={T}")
    if k < 2:
        raise ValueError("k-fold needs k >= 2")
    # array_split convention: the first T % k folds get the extra element
    sizes = np.full(k, T // k)
    sizes[: T % k] += 1
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return _blocks(T, zip(edges[:-1], edges[1:]), 0, "kfold", {"k": k})


def _block_edges(T, block):
    starts = np.arange(0, T, block)
    return [(int(s), int(min(s + block, T))) for s in starts]


def split_block(T, block) -> SplitPlan:
    """Consecutive blocks of ``block`` points, each used once for validation."""
    _check(T, block=block)
    if block > T:
        raise InsufficientHistoryError(f"block={block} exceeds T={T}")
    if block == T:
        raise InsufficientHistoryError("a single block leaves nothing to train on")
    return _blocks(T, _block_edges(T, block), 0, "block", {"block": block})


def split_hv_block(T, block, gap) -> SplitPlan:
    """Block CV with ``gap`` points dropped from training on each side of the validation block."""
    _check(T, block=block)
    if gap < 0:
        raise ValueError("gap must be non-negative")
    if block > T:
        raise InsufficientHistoryError(f"block={block} exceeds T={T}")
    return _blocks(T, _block_edges(T, block), gap, "hv_block", {"block": block, "gap": gap})


@dataclass(frozen=True)
class BootstrapSample:
    indices: np.ndarray
    expected_block: float

    def apply(self, values):
        return np.asarray(values)[self.indices]


def stationary_bootstrap(T, expected_block, seed=None) -> BootstrapSample:
    """Politis-Romano stationary bootstrap indices with circular wrap.

    Each position starts a new block with probability ``1 / expected_block``
    (the first always does); a new block begins at a uniform index, otherwise
    the previous index is advanced by one modulo ``T``.
    """
    if T < 2:
        raise InsufficientHistoryError("need T >= 2")
    if expected_block < 1:
        raise ValueError("expected_block must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    restart = rng.random(T) < 1.0 / expected_block
    restart[0] = True
    starts = rng.integers(0, T, size=T)
    run = np.cumsum(restart) - 1
    run_pos = np.flatnonzero(restart)
    offset = np.arange(T) - run_pos[run]
    idx = (starts[run_pos][run] + offset) % T
    return BootstrapSample(idx, float(expected_block))


@dataclass(frozen=True)
class SyntheticSplit:
    """A resampled path one-split so that the last ``h`` points validate."""

    path: np.ndarray
    h: int

    @property
    def train(self):
        return self.path[: len(self.path) - self.h]

    @property
    def val(self):
        return self.path[len(self.path) - self.h :]


def cgan_splits(model, in_sample, B, h, seed=0):
    """Yield ``B`` recursive cGAN paths, each one-split at ``len - h``.

    Path ``b`` is drawn from ``member_seed(seed, b)`` so it does not depend on ``B``.
    """
    from .cgan import sample_path

    r = np.asarray(getattr(in_sample, "returns", in_sample), dtype=float)
    n = len(r) - model.p
    if not 0 < h < n:
        raise InsufficientHistoryError(f"holdout h={h} must lie inside the path length {n}")
    for b in range(B):
        yield SyntheticSplit(sample_path(model, r, "recursive", seed=member_seed(seed, b)), h)


def bootstrap_splits(in_sample, B, h, expected_block=20, seed=0):
    """Yield ``B`` stationary-bootstrap resamples, each one-split at ``len - h``."""
    r = np.asarray(getattr(in_sample, "returns", in_sample), dtype=float)
    if not 0 < h < len(r):
        raise InsufficientHistoryError(f"holdout h={h} must lie inside the series length {len(r)}")
    for b in range(B):
        yield SyntheticSplit(r[stationary_bootstrap(len(r), expected_block, member_seed(seed, b)).indices], h)
