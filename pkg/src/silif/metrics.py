"""Ranking metrics and paired significance testing.

AUC-ROC uses the rank-statistic (Mann-Whitney) formulation with ties counting
one half.  AUC-PR is average precision with tied scores entering as a block.
Precision@k breaks score ties by original index, which keeps results
deterministic.  The paired t-test evaluates the Student-t tail through the
regularized incomplete beta function (modified Lentz continued fraction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import as_score_array


def zscore(values) -> np.ndarray:
    """(v - mean) / population std; a constant vector maps to all zeros."""
    arr = as_score_array(values)
    if arr.size == 0:
        raise ValueError("zscore requires a non-empty vector")
    sigma = arr.std()
    if sigma == 0:
        return np.zeros_like(arr)
    return (arr - arr.mean()) / sigma


def _binary_labels(labels, n: int) -> np.ndarray:
    y = np.asarray(labels, dtype=int)
    if y.shape != (n,):
        raise ValueError(f"labels have shape {y.shape}, expected ({n},)")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary (0/1)")
    return y


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1], True])
    sizes = np.diff(boundaries)
    # average of positions start+1 .. end within each tie group
    group_rank = (boundaries[:-1] + boundaries[1:] + 1) / 2.0
    ranks = np.empty(values.shape[0], dtype=float)
    ranks[order] = np.repeat(group_rank, sizes)
    return ranks


def auc_roc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative."""
    s = as_score_array(scores)
    y = _binary_labels(labels, s.shape[0])
    n_pos = int(y.sum())
    n_neg = int(y.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc_roc requires at least one positive and one negative label")
    ranks = _average_ranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pr(scores, labels) -> float:
    """Average precision over the descending-score sweep, ties as a block."""
    s = as_score_array(scores)
    y = _binary_labels(labels, s.shape[0])
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("auc_pr requires at least one positive label")
    order = np.argsort(-s, kind="mergesort")
    ss = s[order]
    yy = y[order]
    tp = np.cumsum(yy)
    seen = np.arange(1, s.shape[0] + 1)
    block_end = np.r_[ss[1:] != ss[:-1], True]
    precision = tp[block_end] / seen[block_end]
    recall = tp[block_end] / n_pos
    delta_recall = np.diff(np.r_[0.0, recall])
    return float(np.sum(delta_recall * precision))


def precision_at_k(scores, labels, k: int) -> float:
    """Fraction of positives among the k top-scored points (index-stable ties)."""
    s = as_score_array(scores)
    y = _binary_labels(labels, s.shape[0])
    if k < 1 or k > s.shape[0]:
        raise ValueError(f"k must be in [1, {s.shape[0]}], got {k}")
    top = np.argsort(-s, kind="mergesort")[:k]
    return float(y[top].mean())


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    eps = 3e-16
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t distribution with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0.0:
        return 0.5
    tail = betainc(df / 2.0, 0.5, df / (df + t * t)) / 2.0
    return 1.0 - tail if t > 0 else tail


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    wins: int
    degenerate: bool = False

    def __iter__(self):
        return iter((self.t, self.p, self.wins))


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on per-seed values.

    ``wins`` counts entries where a > b.  All-zero differences give
    (t=0, p=1); zero variance with a non-zero mean is reported as p=0 with
    the ``degenerate`` flag set.
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.shape != bv.shape or av.ndim != 1:
        raise ValueError("paired_t_test requires two equal-length vectors")
    n = av.shape[0]
    if n < 2:
        raise ValueError("paired_t_test requires at least 2 pairs")
    d = av - bv
    wins = int(np.sum(d > 0))
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0, wins=wins)
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0, wins=wins, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = betainc(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(t=float(t), p=float(p), wins=wins)
