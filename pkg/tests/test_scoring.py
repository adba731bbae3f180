import numpy as np
import pytest
import scipy.stats
from sklearn.metrics import silhouette_samples

from silif.dataset import generate_synthetic
from silif.fingerprint import ClusterModel, FingerprintMatrix, kmeans_fit, standardize_columns
from silif.iforest import fit, score
from silif.metrics import auc_roc
from silif.scoring import (
    SilifParams,
    combine,
    exact_silhouette,
    silhouette_contribution,
    silif_score,
)


def model_from(centroids, labels, k=None):
    centroids = np.asarray(centroids, float)
    labels = np.asarray(labels, int)
    return ClusterModel(
        centroids=centroids,
        labels=labels,
        inertia=0.0,
        k=k or centroids.shape[0],
        seed=0,
        mode="full",
    )


def fp(values):
    return FingerprintMatrix(np.asarray(values, float), standardized=True)


class TestSilhouetteContribution:
    def test_boundary_cases(self):
        centroids = [[0.0, 0.0], [4.0, 0.0]]
        points = fp([[0.0, 0.0], [4.0, 0.0], [2.0, 0.0]])
        model = model_from(centroids, labels=[0, 0, 0])
        out = silhouette_contribution(points, model).scores
        assert out[0] == pytest.approx(0.0, abs=1e-12)  # on own centroid
        assert out[1] == pytest.approx(2.0, abs=1e-12)  # on the rival centroid
        assert out[2] == pytest.approx(1.0, abs=1e-12)  # equidistant boundary

    def test_range_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n, t, k = rng.integers(10, 40), rng.integers(2, 6), rng.integers(2, 5)
            X = rng.normal(size=(n, t))
            m = standardize_columns(FingerprintMatrix(X))
            model = kmeans_fit(m, int(k), seed=int(rng.integers(1000)), mode="full")
            out = silhouette_contribution(m, model).scores
            assert np.all(out >= 0.0) and np.all(out <= 2.0)

    def test_single_cluster_rejected(self):
        points = fp([[0.0], [1.0]])
        model = model_from([[0.5]], labels=[0, 0])
        with pytest.raises(ValueError, match="2 clusters"):
            silhouette_contribution(points, model)

    def test_label_length_mismatch(self):
        points = fp([[0.0], [1.0], [2.0]])
        model = model_from([[0.0], [2.0]], labels=[0, 1])
        with pytest.raises(ValueError, match="labels"):
            silhouette_contribution(points, model)

    def test_requires_standardized(self):
        m = FingerprintMatrix(np.zeros((2, 1)))
        model = model_from([[0.0], [1.0]], labels=[0, 1])
        with pytest.raises(ValueError, match="standardized"):
            silhouette_contribution(m, model)


class TestExactSilhouette:
    def test_two_singletons(self):
        out = exact_silhouette(fp([[0.0], [5.0]]), [0, 1])
        assert np.array_equal(out, np.zeros(2))

    def test_hand_computed_three_points(self):
        out = exact_silhouette(fp([[0.0], [0.1], [10.0]]), [0, 0, 1])
        assert out[0] == pytest.approx((10.0 - 0.1) / 10.0, abs=1e-12)
        assert out[0] == pytest.approx(0.99, abs=1e-9)

    def test_tight_and_distant_blobs(self):
        rng = np.random.default_rng(1)
        a = rng.normal(scale=0.05, size=(30, 2))
        b = rng.normal(scale=0.05, size=(30, 2)) + 50.0
        out = exact_silhouette(fp(np.vstack([a, b])), np.r_[np.zeros(30, int), np.ones(30, int)])
        assert np.all(out > 0.9)

    def test_matches_sklearn(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 4))
        labels = rng.integers(0, 3, size=60)
        ref = silhouette_samples(X, labels)
        out = exact_silhouette(fp(X), labels)
        assert np.allclose(out, ref, atol=1e-9)

    def test_single_cluster_rejected(self):
        with pytest.raises(ValueError, match="2 clusters"):
            exact_silhouette(fp([[0.0], [1.0]]), [0, 0])

    def test_size_guard(self):
        X = np.zeros((10_001, 1))
        with pytest.raises(ValueError, match="10,?000|10000"):
            exact_silhouette(fp(X), np.r_[np.zeros(10_000, int), [1]])


class TestCombine:
    def test_alpha_zero_preserves_base_ranking(self):
        rng = np.random.default_rng(3)
        s_if = rng.uniform(size=100)
        s_sil = rng.uniform(0, 2, size=100)
        out = combine(s_if, s_sil, 0.0)
        assert np.array_equal(
            np.argsort(out.scores, kind="mergesort"),
            np.argsort((s_if - s_if.mean()) / s_if.std(), kind="mergesort"),
        )
        assert np.array_equal(
            np.argsort(out.scores, kind="mergesort"), np.argsort(s_if, kind="mergesort")
        )

    def test_constant_silhouette_is_inert(self):
        rng = np.random.default_rng(4)
        s_if = rng.uniform(size=50)
        s_sil = np.full(50, 1.3)
        for alpha in (0.0, 0.5, 2.0, 4.0):
            out = combine(s_if, s_sil, alpha)
            assert np.array_equal(
                np.argsort(out.scores, kind="mergesort"),
                np.argsort(s_if, kind="mergesort"),
            )

    def test_opposite_rankings_cancel(self):
        out = combine([1.0, 2.0, 3.0], [3.0, 2.0, 1.0], 1.0)
        assert np.allclose(out.scores, 0.0, atol=1e-12)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="lengths"):
            combine([1.0, 2.0], [1.0, 2.0, 3.0], 1.0)

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            combine([1.0, 2.0], [1.0, 2.0], -0.5)

    def test_affine_in_alpha(self):
        rng = np.random.default_rng(5)
        s_if = rng.uniform(size=30)
        s_sil = rng.uniform(0, 2, size=30)
        base = combine(s_if, s_sil, 0.0).scores
        unit = combine(s_if, s_sil, 1.0).scores
        for alpha in (0.25, 0.5, 2.0, 4.0):
            expected = base + alpha * (unit - base)
            assert np.allclose(combine(s_if, s_sil, alpha).scores, expected, atol=1e-12)

    def test_stored_statistics_mode(self):
        s_if = np.array([1.0, 2.0, 3.0])
        s_sil = np.array([0.5, 1.0, 1.5])
        out = combine(s_if, s_sil, 2.0, if_stats=(2.0, 1.0), sil_stats=(1.0, 0.5))
        expected = (s_if - 2.0) / 1.0 + 2.0 * (s_sil - 1.0) / 0.5
        assert np.allclose(out.scores, expected, atol=1e-15)
        # constant-vector convention: std 0 maps to zeros
        out0 = combine(s_if, s_sil, 1.0, sil_stats=(1.0, 0.0))
        assert np.allclose(out0.scores, (s_if - s_if.mean()) / s_if.std(), atol=1e-15)


class TestOracleConcordance:
    def test_centroid_contribution_tracks_exact_silhouette(self):
        rng = np.random.default_rng(6)
        centers = np.array([[0.0] * 8, [15.0] * 8, [-15.0, 15.0] * 4])
        X = np.vstack([c + rng.normal(size=(100, 8)) for c in centers])
        m = standardize_columns(FingerprintMatrix(X))
        model = kmeans_fit(m, 3, seed=0, mode="full")
        approx = silhouette_contribution(m, model).scores
        exact = 1.0 - exact_silhouette(m, model.labels)
        rho = scipy.stats.spearmanr(approx, exact).statistic
        assert rho > 0.9


class TestSilifScore:
    def test_alpha_zero_matches_plain_forest_ranking(self):
        data = generate_synthetic(400, 15, 6, 42)
        sv, forest, _ = silif_score(data, SilifParams(seed=42, alpha=0.0, n_trees=50, subsample=128))
        plain = score(fit(data, 50, 128, 42), data)
        assert np.array_equal(
            np.argsort(sv.scores, kind="mergesort"),
            np.argsort(plain.scores, kind="mergesort"),
        )

    def test_bit_identical_reruns(self):
        data = generate_synthetic(200, 8, 4, 43)
        params = SilifParams(seed=7, alpha=1.0, n_trees=25, subsample=64, k=4)
        a, _, _ = silif_score(data, params)
        b, _, _ = silif_score(data, params)
        assert np.array_equal(a.scores, b.scores)

    def test_returned_models_are_fitted(self):
        data = generate_synthetic(200, 8, 4, 44)
        params = SilifParams(seed=3, alpha=1.0, n_trees=20, subsample=64, k=4)
        sv, forest, model = silif_score(data, params)
        assert len(sv) == len(data)
        assert forest.n_trees == 20
        assert model.k == 4
        assert model.labels.shape == (len(data),)
        assert model.col_means is not None and model.col_stds is not None

    def test_detects_planted_anomalies(self):
        data = generate_synthetic(500, 20, 6, 45)
        sv, _, _ = silif_score(data, SilifParams(seed=45, alpha=1.0))
        assert auc_roc(sv, data.labels) > 0.85

    def test_invalid_alpha_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            SilifParams(seed=1, alpha=-1.0)

    def test_provenance(self):
        data = generate_synthetic(120, 6, 3, 46)
        sv, _, _ = silif_score(data, SilifParams(seed=11, alpha=0.5, n_trees=10, subsample=32, k=3))
        assert sv.method == "silif"
        assert sv.params["alpha"] == 0.5
        assert sv.seed == 11


class TestLabelIsolation:
    def test_scoring_never_reads_labels(self):
        data = generate_synthetic(150, 8, 4, 47)
        silif_score(data, SilifParams(seed=1, alpha=1.0, n_trees=10, subsample=32, k=3))
        score(fit(data, 10, 32, 1), data)
        assert data.label_read_count == 0
