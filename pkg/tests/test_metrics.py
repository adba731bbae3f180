import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from sklearn.metrics import average_precision_score, roc_auc_score

from silif.metrics import (
    auc_pr,
    auc_roc,
    betainc,
    paired_t_test,
    precision_at_k,
    student_t_cdf,
    zscore,
)


def brute_force_auc_roc(scores, labels):
    """Pair-counting oracle: wins plus half-ties over positive-negative pairs."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels, int)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def brute_force_auc_pr(scores, labels):
    """Per-threshold precision-recall sweep, recomputed from scratch."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels, int)
    n_pos = labels.sum()
    thresholds = np.unique(scores)[::-1]
    ap = 0.0
    prev_recall = 0.0
    for thr in thresholds:
        taken = scores >= thr
        tp = int(labels[taken].sum())
        precision = tp / int(taken.sum())
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


class TestZscore:
    def test_three_points(self):
        out = zscore([1.0, 2.0, 3.0])
        expected = 1.0 / math.sqrt(2.0 / 3.0)
        assert out == pytest.approx([-expected, 0.0, expected], abs=1e-12)
        assert expected == pytest.approx(1.2247, abs=1e-4)

    def test_constant_vector(self):
        assert np.array_equal(zscore([5.0, 5.0, 5.0]), np.zeros(3))

    def test_mean_zero_std_one(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            v = rng.normal(size=rng.integers(2, 50)) * rng.uniform(0.1, 10)
            z = zscore(v)
            assert abs(z.mean()) < 1e-9
            assert abs(z.std() - 1.0) < 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            zscore([])


class TestAucRoc:
    def test_perfect_ranking(self):
        assert auc_roc([3, 2, 1], [1, 0, 0]) == 1.0

    def test_inverted_ranking(self):
        assert auc_roc([3, 2, 1], [0, 0, 1]) == 0.0

    def test_tie_rule(self):
        assert auc_roc([1.0, 1.0], [1, 0]) == pytest.approx(0.5, abs=1e-15)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            auc_roc([1, 2], [0, 0])
        with pytest.raises(ValueError, match="positive"):
            auc_roc([1, 2], [1, 1])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(5, 60))
            scores = rng.choice([0.0, 0.5, 1.0, 2.0, 3.5], size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                continue
            assert auc_roc(scores, labels) == pytest.approx(
                brute_force_auc_roc(scores, labels), abs=1e-12
            )

    def test_matches_sklearn(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            n = int(rng.integers(10, 200))
            scores = rng.normal(size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                continue
            assert auc_roc(scores, labels) == pytest.approx(
                roc_auc_score(labels, scores), abs=1e-12
            )

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(13)
        scores = rng.normal(size=80)
        labels = rng.integers(0, 2, size=80)
        labels[0], labels[1] = 0, 1
        base = auc_roc(scores, labels)
        assert auc_roc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc_roc(3.0 * scores + 7.0, labels) == pytest.approx(base, abs=1e-12)


class TestAucPr:
    def test_hand_example(self):
        assert auc_pr([3, 2, 1], [1, 0, 1]) == pytest.approx(5.0 / 6.0, abs=1e-12)
        assert 5.0 / 6.0 == pytest.approx(0.8333, abs=1e-4)

    def test_all_positive(self):
        assert auc_pr([3, 1, 2], [1, 1, 1]) == 1.0

    def test_no_positive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            auc_pr([1, 2], [0, 0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(5, 60))
            scores = rng.choice([0.0, 0.5, 1.0, 2.0], size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.sum() == 0:
                continue
            assert auc_pr(scores, labels) == pytest.approx(
                brute_force_auc_pr(scores, labels), abs=1e-12
            )

    def test_matches_sklearn(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            n = int(rng.integers(10, 200))
            scores = rng.normal(size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.sum() == 0:
                continue
            assert auc_pr(scores, labels) == pytest.approx(
                average_precision_score(labels, scores), abs=1e-10
            )

    def test_null_model_near_base_rate(self):
        rng = np.random.default_rng(23)
        n = 10_000
        labels = (rng.uniform(size=n) < 0.035).astype(int)
        scores = rng.uniform(size=n)
        assert auc_pr(scores, labels) == pytest.approx(0.035, abs=0.01)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(24)
        scores = rng.normal(size=80)
        labels = rng.integers(0, 2, size=80)
        labels[0] = 1
        base = auc_pr(scores, labels)
        assert auc_pr(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc_pr(2.0 * scores - 1.0, labels) == pytest.approx(base, abs=1e-12)


class TestPrecisionAtK:
    def test_top_two(self):
        assert precision_at_k([4, 3, 2, 1], [1, 1, 0, 0], 2) == 1.0

    def test_full_depth(self):
        assert precision_at_k([4, 3, 2, 1], [1, 1, 0, 0], 4) == 0.5

    def test_no_positives(self):
        assert precision_at_k([4, 3, 2, 1], [0, 0, 0, 0], 3) == 0.0

    def test_tie_broken_by_original_index(self):
        # all scores equal: the first k indices are taken
        assert precision_at_k([1.0, 1.0, 1.0, 1.0], [1, 0, 1, 0], 2) == 0.5
        assert precision_at_k([1.0, 1.0, 1.0, 1.0], [0, 1, 1, 1], 1) == 0.0

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            precision_at_k([1, 2], [0, 1], 3)
        with pytest.raises(ValueError):
            precision_at_k([1, 2], [0, 1], 0)


class TestPairedTTest:
    def test_hand_example(self):
        d = np.array([0.5, 1.0, 1.5])
        res = paired_t_test(d, np.zeros(3))
        assert res.t == pytest.approx(3.4641, abs=1e-3)
        assert res.p == pytest.approx(0.0742, abs=1e-3)
        # frozen closed form: two-sided p at df=2 is 1 - sqrt(6/7)
        assert res.t == pytest.approx(2.0 * math.sqrt(3.0), abs=1e-12)
        assert res.p == pytest.approx(1.0 - math.sqrt(6.0 / 7.0), abs=1e-12)
        assert res.wins == 3

    def test_identical_vectors(self):
        res = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (res.t, res.p, res.wins) == (0.0, 1.0, 0)

    def test_all_wins(self):
        a = np.array([0.13, 0.14, 0.12, 0.15, 0.13])
        res = paired_t_test(a, a - [0.01, 0.02, 0.005, 0.01, 0.03])
        assert res.wins == 5

    def test_antisymmetry(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            fwd = paired_t_test(a, b)
            rev = paired_t_test(b, a)
            assert fwd.t == pytest.approx(-rev.t, abs=1e-12)
            assert fwd.p == pytest.approx(rev.p, abs=1e-12)
            nonzero = int(np.sum(a != b))
            assert fwd.wins + rev.wins == nonzero

    def test_zero_variance_nonzero_mean(self):
        res = paired_t_test([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
        assert res.p == 0.0
        assert res.degenerate
        assert math.isinf(res.t) and res.t > 0

    def test_matches_scipy(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            n = int(rng.integers(3, 15))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            res = paired_t_test(a, b)
            ref = scipy.stats.ttest_rel(a, b)
            assert res.t == pytest.approx(ref.statistic, rel=1e-10)
            assert res.p == pytest.approx(ref.pvalue, rel=1e-8)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            paired_t_test([1.0], [2.0])

    def test_tuple_unpacking(self):
        t, p, wins = paired_t_test([1.0, 2.0], [0.5, 1.5])
        assert wins == 2


class TestSpecialFunctions:
    def test_betainc_against_scipy(self):
        params = [(0.5, 0.5), (1.0, 3.0), (2.5, 0.5), (10.0, 10.0), (0.5, 25.0)]
        xs = [1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1 - 1e-6]
        for a, b in params:
            for x in xs:
                ref = scipy.special.betainc(a, b, x)
                mine = betainc(a, b, x)
                assert mine == pytest.approx(ref, rel=1e-8, abs=1e-14)

    def test_betainc_edges(self):
        assert betainc(2.0, 3.0, 0.0) == 0.0
        assert betainc(2.0, 3.0, 1.0) == 1.0
        with pytest.raises(ValueError):
            betainc(0.0, 1.0, 0.5)

    def test_student_t_cdf_against_scipy(self):
        for df in (1, 2, 4, 9, 30, 200):
            for t in (-8.0, -2.5, -0.3, 0.0, 0.7, 3.2, 12.0):
                ref = scipy.stats.t.cdf(t, df)
                assert student_t_cdf(t, df) == pytest.approx(ref, rel=1e-8, abs=1e-12)

    def test_student_t_cdf_center(self):
        assert student_t_cdf(0.0, 5) == 0.5
