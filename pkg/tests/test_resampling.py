import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

import oracles
from cgan_strategies.errors import InsufficientHistoryError
from cgan_strategies.resampling import (
    SplitPlan, bootstrap_splits, member_seed, split_block, split_hv_block, split_kfold, split_naive,
    split_one_split, split_sliding, stationary_bootstrap,
)
from cgan_strategies.timeseries import acf

from conftest import ar1


def test_one_split_example():
    (tr, va), = split_one_split(10, 4).folds
    assert tr.tolist() == list(range(6)) and va.tolist() == [6, 7, 8, 9]


def test_block_example():
    plan = split_block(1008, 252)
    assert len(plan) == 4
    assert all(len(va) == 252 and len(tr) == 756 for tr, va in plan.folds)


def test_hv_block_example():
    lens = [len(tr) for tr, _ in split_hv_block(1008, 252, 10).folds]
    assert lens == [746, 736, 736, 746]


def test_sliding_fold_count():
    plan = split_sliding(1000, 252, 252)
    assert len(plan) == (1000 - 252) // 252
    assert plan.folds[1][0].tolist() == list(range(252, 504))
    assert plan.folds[1][1].tolist() == list(range(504, 756))


@pytest.mark.parametrize("T", [10, 37, 504])
def test_against_enumeration(T):
    cases = [
        (split_naive(T), oracles.naive(T)),
        (split_one_split(T, T // 3), oracles.one_split(T, T // 3)),
        (split_sliding(T, T // 4, T // 5), oracles.sliding(T, T // 4, T // 5)),
        (split_kfold(T, 3), oracles.kfold(T, 3)),
        (split_block(T, T // 3), oracles.block(T, T // 3)),
        (split_hv_block(T, T // 4, 2), oracles.hv_block(T, T // 4, 2)),
    ]
    for plan, ref in cases:
        assert oracles.plan_lists(plan) == ref, plan.scheme_name


@given(st.integers(4, 300), st.data())
def test_split_invariants(T, data):
    k = data.draw(st.integers(2, T))
    b = data.draw(st.integers(1, T - 1))
    gap = data.draw(st.integers(0, 5))
    for plan in (split_kfold(T, k), split_block(T, b)):
        vals = np.concatenate([va for _, va in plan.folds])
        assert np.array_equal(np.sort(vals), np.arange(T))  # covered exactly once
        for tr, va in plan.folds:
            assert not np.intersect1d(tr, va).size
            assert np.array_equal(np.union1d(tr, va), np.arange(T))
    try:
        hv = split_hv_block(T, b, gap)
    except InsufficientHistoryError:
        return
    vals = np.concatenate([va for _, va in hv.folds])
    assert np.array_equal(np.sort(vals), np.arange(T))
    for tr, va in hv.folds:
        assert not np.intersect1d(tr, va).size
        assert np.min(np.abs(tr[:, None] - va[None, :])) > gap


@given(st.integers(2, 200), st.data())
def test_one_split_tail(T, data):
    h = data.draw(st.integers(1, T - 1))
    (tr, va), = split_one_split(T, h).folds
    assert va.tolist() == list(range(T - h, T)) and len(tr) == T - h


def test_split_errors():
    with pytest.raises(InsufficientHistoryError):
        split_one_split(10, 10)
    with pytest.raises(InsufficientHistoryError):
        split_block(10, 11)
    with pytest.raises(InsufficientHistoryError):
        split_kfold(5, 6)
    with pytest.raises(InsufficientHistoryError):
        split_sliding(10, 8, 3)
    with pytest.raises(ValueError):
        split_kfold(10, 1)


def test_plan_json_roundtrip():
    plan = split_hv_block(50, 10, 2)
    back = SplitPlan.from_dict(json.loads(plan.to_json()))
    assert back.params == {"block": 10, "gap": 2}
    assert oracles.plan_lists(back) == oracles.plan_lists(plan)


def test_member_seed_prefix_property():
    assert member_seed(7, 3) == member_seed(7, 3)
    assert len({member_seed(7, b) for b in range(100)}) == 100
    assert member_seed(7, 3) != member_seed(8, 3)


@given(st.integers(2, 500), st.floats(1, 50), st.integers(0, 2**32 - 1))
def test_bootstrap_indices_valid(T, block, seed):
    idx = stationary_bootstrap(T, block, seed).indices
    assert len(idx) == T and idx.min() >= 0 and idx.max() < T


def test_bootstrap_runs_are_consecutive_mod_T():
    s = stationary_bootstrap(50, 10, 0)
    steps = (np.diff(s.indices) % 50)
    assert np.mean(steps == 1) > 0.8
    assert np.array_equal(s.apply(np.arange(50) * 2.0), s.indices * 2.0)


def _run_lengths(idx, T):
    breaks = np.flatnonzero(np.diff(idx) % T != 1)
    return np.diff(np.concatenate([[-1], breaks, [len(idx) - 1]]))


def test_bootstrap_mean_block_length():
    rng = np.random.default_rng(0)
    lengths = np.concatenate([_run_lengths(stationary_bootstrap(1000, 20, rng).indices, 1000) for _ in range(500)])
    # a restart can land on the continuation index, merging runs slightly (p = 1/T)
    assert 19 <= lengths.mean() <= 21


def test_bootstrap_block_one_is_iid_uniform():
    rng = np.random.default_rng(1)
    idx = np.concatenate([stationary_bootstrap(20, 1, rng).indices for _ in range(5000)])
    assert sps.chisquare(np.bincount(idx, minlength=20)).pvalue > 0.01


def test_bootstrap_preserves_dependence():
    x = ar1(1000, 0.8, seed=2)
    rng = np.random.default_rng(3)
    blocky = np.mean([acf(x[stationary_bootstrap(1000, 20, rng).indices], 1)[1] for _ in range(200)])
    iid = np.mean([acf(x[stationary_bootstrap(1000, 1, rng).indices], 1)[1] for _ in range(200)])
    assert blocky > iid + 0.3


def test_bootstrap_splits():
    x = np.arange(100.0)
    splits = list(bootstrap_splits(x, 3, 20, seed=1))
    assert len(splits) == 3 and all(len(s.val) == 20 and len(s.path) == 100 for s in splits)
    assert np.isin(splits[0].path, x).all()
    with pytest.raises(InsufficientHistoryError):
        list(bootstrap_splits(x, 1, 100))
