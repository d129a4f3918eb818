"""Robust summaries and nonparametric tests for cross-asset comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

QUANTILES = (0, 25, 50, 75, 100)

# both samples at or below this size use the exact null distribution
EXACT_MAX_N = 20


def robust_summary(values) -> dict:
    """Median, mean absolute deviation about the median, and quartiles.

    Quantiles interpolate linearly between order statistics.
    """
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    if x.size == 0:
        raise ValueError("no finite values to summarise")
    med = float(np.median(x))
    q = np.percentile(x, QUANTILES)
    return {
        "median": med,
        "mad": float(np.mean(np.abs(x - med))),
        "quantiles": {f"{k}%": float(v) for k, v in zip(QUANTILES, q)},
        "n": int(x.size),
    }


def _rank_sum_exact_counts(doubled_ranks, n):
    """Number of size-n subsets attaining each sum of (doubled) ranks."""
    total = int(sum(doubled_ranks))
    # counts[j, s]: subsets of size j with sum s
    counts = np.zeros((n + 1, total + 1), dtype=np.int64)
    counts[0, 0] = 1
    for r in doubled_ranks:
        r = int(r)
        counts[1:, r:] += counts[:-1, : total + 1 - r].copy()
    return counts[n]


def wilcoxon_rank_sum(a, b, exact=None) -> float:
    """Two-sided p-value of the Wilcoxon rank-sum test.

    Ties receive average ranks. Small samples (both sizes <= 20) use the exact
    permutation distribution of the rank sum; larger ones use the normal
    approximation with tie-corrected variance and no continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = a[~np.isnan(a)], b[~np.isnan(b)]
    n, m = len(a), len(b)
    if n < 2 or m < 2:
        raise ValueError("each sample needs at least 2 observations")
    N = n + m
    ranks = sps.rankdata(np.concatenate([a, b]))
    if exact is None:
        exact = n <= EXACT_MAX_N and m <= EXACT_MAX_N
    if exact:
        doubled = np.rint(2 * ranks).astype(np.int64)
        w2 = int(doubled[:n].sum())
        mu2 = n * (N + 1)  # doubled mean of the rank sum
        counts = _rank_sum_exact_counts(doubled, n)
        sums = np.arange(len(counts))
        extreme = np.abs(sums - mu2) >= abs(w2 - mu2)
        return float(min(1.0, counts[extreme].sum() / counts.sum()))
    w = ranks[:n].sum()
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = np.sum(tie_counts**3 - tie_counts) / (N * (N - 1))
    var = n * m / 12.0 * ((N + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = (w - n * (N + 1) / 2.0) / math.sqrt(var)
    return float(min(1.0, 2.0 * sps.norm.sf(abs(z))))


def within_row_ranks(matrix, higher_is_better=True):
    """Average ranks within each row; rank 1 is the best method."""
    M = np.asarray(matrix, dtype=float)
    return sps.rankdata(-M if higher_is_better else M, axis=1)


@dataclass(frozen=True)
class FriedmanResult:
    avg_ranks: np.ndarray
    chi2: float
    p_value: float
    n_rows: int
    methods: list


def friedman_test(matrix, methods=None, higher_is_better=True) -> FriedmanResult:
    """Friedman chi-square on an assets x methods matrix.

    Rows containing NaN are dropped. ``chi2 = 12N / (k(k+1)) * sum_j (Rbar_j - (k+1)/2)^2``
    with a chi-square(k - 1) reference distribution.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-D results matrix")
    M = M[~np.isnan(M).any(axis=1)]
    N, k = M.shape
    if N < 2 or k < 2:
        raise ValueError(f"need >= 2 complete rows and >= 2 methods, got {N}x{k}")
    R = within_row_ranks(M, higher_is_better).mean(axis=0)
    chi2 = 12.0 * N / (k * (k + 1)) * float(np.sum((R - (k + 1) / 2.0) ** 2))
    methods = list(methods) if methods is not None else [f"m{j}" for j in range(k)]
    return FriedmanResult(R, chi2, float(sps.chi2.sf(chi2, k - 1)), N, methods)


@dataclass(frozen=True)
class HolmResult:
    order: np.ndarray        # indices of p_values, ascending
    thresholds: np.ndarray   # alpha / (m - i + 1) in ascending-p order
    reject: np.ndarray       # per original index


def holm_correction(p_values, alpha=0.05) -> HolmResult:
    """Holm step-down procedure."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise ValueError("no p-values")
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = alpha / (m - np.arange(m))
    passed = p[order] <= thresholds
    n_reject = m if passed.all() else int(np.argmin(passed))
    reject = np.zeros(m, dtype=bool)
    reject[order[:n_reject]] = True
    return HolmResult(order, thresholds, reject)


def rank_table(matrix, methods, alpha=0.05, higher_is_better=True) -> dict:
    """Average ranks, Friedman test and Holm-corrected comparisons against the best method.

    Each method's column is compared with the best-ranked method's column by
    the rank-sum test. Rows are ordered from the worst average rank to the
    best, so Holm thresholds line up with ascending p-values.
    """
    fr = friedman_test(matrix, methods, higher_is_better)
    M = np.asarray(matrix, dtype=float)
    M = M[~np.isnan(M).any(axis=1)]
    best = int(np.argmin(fr.avg_ranks))
    others = [j for j in range(len(methods)) if j != best]
    pvals = np.array([wilcoxon_rank_sum(M[:, best], M[:, j]) for j in others])
    holm = holm_correction(pvals, alpha)
    rows = []
    for pos, idx in enumerate(holm.order):
        j = others[idx]
        rows.append({
            "method": methods[j],
            "avg_rank": float(fr.avg_ranks[j]),
            "p_value": float(pvals[idx]),
            "holm_threshold": float(holm.thresholds[pos]),
            "reject": bool(holm.reject[idx]),
        })
    rows.append({"method": methods[best], "avg_rank": float(fr.avg_ranks[best]),
                 "p_value": None, "holm_threshold": None, "reject": None})
    return {"rows": rows, "friedman_chi2": fr.chi2, "friedman_p": fr.p_value, "n_assets": fr.n_rows}
