"""Classical unsupervised detectors used for comparison runs.

Every function returns a ScoreVector in the repository-wide orientation
(higher = more anomalous).  HBOS and ECOD are deterministic and seed-free.
The k-means distance score z-scores the feature matrix first so no single
feature dominates the Euclidean metric; kNN and LOF score the features as
given (the benchmark harness hands them a z-scored view).  The neighbor
methods are exact brute force and are guarded to 100,000 rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fingerprint
from .base import ScoreVector
from .iforest import _features

NEIGHBOR_GUARD = 100_000
_DENSITY_FLOOR = 1e-12
_LRD_FLOOR = 1e-12


def _zscore_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    safe = np.where(stds > 0, stds, 1.0)
    Z = (X - means) / safe
    Z[:, stds == 0] = 0.0
    return Z, means, stds


@dataclass
class HistogramModel:
    """Per-feature equal-width histograms over [min, max].

    Densities are counts / (N * bin width) so each non-degenerate feature's
    density integrates to 1 over its range.  Features with zero range are
    flagged in ``width`` and contribute density 1 (score 0) for every point.
    """

    edges: np.ndarray      # (d, n_bins + 1)
    densities: np.ndarray  # (d, n_bins)
    width: np.ndarray      # (d,)

    @classmethod
    def fit(cls, X: np.ndarray, n_bins: int) -> "HistogramModel":
        n, d = X.shape
        edges = np.empty((d, n_bins + 1))
        densities = np.ones((d, n_bins))
        width = np.empty(d)
        for j in range(d):
            lo = X[:, j].min()
            hi = X[:, j].max()
            edges[j] = np.linspace(lo, hi, n_bins + 1)
            w = (hi - lo) / n_bins
            width[j] = w
            if w > 0:
                idx = cls._bin_index(X[:, j], lo, w, n_bins)
                counts = np.bincount(idx, minlength=n_bins)
                densities[j] = counts / (n * w)
        return cls(edges=edges, densities=densities, width=width)

    @staticmethod
    def _bin_index(col: np.ndarray, lo: float, w: float, n_bins: int) -> np.ndarray:
        # Out-of-range values land in the nearest boundary bin.
        idx = np.floor((col - lo) / w).astype(np.int64)
        return np.clip(idx, 0, n_bins - 1)

    def neg_log_density(self, X: np.ndarray) -> np.ndarray:
        n_bins = self.densities.shape[1]
        total = np.zeros(X.shape[0])
        for j in range(self.edges.shape[0]):
            if self.width[j] == 0:
                continue
            idx = self._bin_index(X[:, j], self.edges[j, 0], self.width[j], n_bins)
            total += -np.log(np.maximum(self.densities[j][idx], _DENSITY_FLOOR))
        return total


def hbos_score(data, n_bins: int = 20) -> ScoreVector:
    """Histogram-based outlier score: sum of per-feature -log bin densities."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    X = _features(data)
    model = HistogramModel.fit(X, n_bins)
    return ScoreVector(model.neg_log_density(X), method="hbos", params={"n_bins": n_bins})


@dataclass
class EcdfModel:
    """Per-feature sorted training values for empirical tail probabilities."""

    sorted_values: list[np.ndarray]
    skewness: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "EcdfModel":
        svals = [np.sort(X[:, j]) for j in range(X.shape[1])]
        skew = np.empty(X.shape[1])
        for j in range(X.shape[1]):
            col = X[:, j]
            centered = col - col.mean()
            m2 = np.mean(centered**2)
            skew[j] = 0.0 if m2 == 0 else np.mean(centered**3) / m2**1.5
        return cls(sorted_values=svals, skewness=skew)

    def left_tail(self, j: int, x: np.ndarray) -> np.ndarray:
        sv = self.sorted_values[j]
        n = sv.shape[0]
        return np.maximum(np.searchsorted(sv, x, side="right") / n, 1.0 / n)

    def right_tail(self, j: int, x: np.ndarray) -> np.ndarray:
        sv = self.sorted_values[j]
        n = sv.shape[0]
        return np.maximum((n - np.searchsorted(sv, x, side="left")) / n, 1.0 / n)


def ecod_score(data) -> ScoreVector:
    """Empirical-CDF outlier score, parameter-free and seed-free.

    Per feature, the left tail is P(X <= x) and the right tail P(X >= x),
    both floored at 1/N.  The final score is the maximum of the summed left,
    summed right, and summed skewness-selected negative log tails.
    """
    X = _features(data)
    model = EcdfModel.fit(X)
    n = X.shape[0]
    o_left = np.zeros(n)
    o_right = np.zeros(n)
    o_skew = np.zeros(n)
    for j in range(X.shape[1]):
        nll = -np.log(model.left_tail(j, X[:, j]))
        nlr = -np.log(model.right_tail(j, X[:, j]))
        o_left += nll
        o_right += nlr
        o_skew += nll if model.skewness[j] < 0 else nlr
    scores = np.maximum(np.maximum(o_left, o_right), o_skew)
    return ScoreVector(scores, method="ecod", params={})


def kmeans_distance_score(data, k: int = 8, seed: int = 0) -> ScoreVector:
    """Distance to the nearest k-means centroid in z-scored feature space."""
    X = _features(data)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds the number of points ({X.shape[0]})")
    Z, means, stds = _zscore_columns(X)
    if k == 1:
        center = Z.mean(axis=0)
        scores = np.sqrt(((Z - center) ** 2).sum(axis=1))
    else:
        fm = fingerprint.FingerprintMatrix(Z, standardized=True, col_means=means, col_stds=stds)
        model = fingerprint.kmeans_fit(fm, k, seed, mode="auto")
        _, d2 = fingerprint._nearest(Z, model.centroids)
        scores = np.sqrt(d2)
    return ScoreVector(scores, method="kmeans", params={"k": k}, seed=seed)


def _self_excluded_distance_rows(X: np.ndarray):
    """Yield (start, stop, dists) blocks with the diagonal set to +inf."""
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    block = max(1, min(n, int(8_000_000 / n)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] - 2.0 * (X[start:stop] @ X.T) + sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        d = np.sqrt(d2)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        yield start, stop, d


def knn_score(data, k: int = 5) -> ScoreVector:
    """Mean Euclidean distance to the k nearest neighbors (exact brute force)."""
    X = _features(data)
    n = X.shape[0]
    if n > NEIGHBOR_GUARD:
        raise ValueError(
            f"knn_score is brute force and limited to {NEIGHBOR_GUARD} rows (got {n})"
        )
    if k < 1 or k >= n:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    scores = np.empty(n)
    for start, stop, d in _self_excluded_distance_rows(X):
        nearest = np.partition(d, k - 1, axis=1)[:, :k]
        scores[start:stop] = nearest.mean(axis=1)
    return ScoreVector(scores, method="knn", params={"k": k})


def lof_score(data, k: int = 20) -> ScoreVector:
    """Local outlier factor; about 1 for inliers, above 1 for outliers.

    Neighborhoods include every point tied at the k-distance.  The mean
    reachability is floored at 1e-12 so duplicate-heavy data stays finite.
    """
    X = _features(data)
    n = X.shape[0]
    if n > NEIGHBOR_GUARD:
        raise ValueError(
            f"lof_score is brute force and limited to {NEIGHBOR_GUARD} rows (got {n})"
        )
    if k < 1 or k >= n:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")

    k_dist = np.empty(n)
    neighbor_idx: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    neighbor_dist: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for start, stop, d in _self_excluded_distance_rows(X):
        kd = np.partition(d, k - 1, axis=1)[:, k - 1]
        k_dist[start:stop] = kd
        for i in range(stop - start):
            nbrs = np.flatnonzero(d[i] <= kd[i])
            neighbor_idx[start + i] = nbrs
            neighbor_dist[start + i] = d[i, nbrs]

    lrd = np.empty(n)
    for i in range(n):
        reach = np.maximum(k_dist[neighbor_idx[i]], neighbor_dist[i])
        lrd[i] = 1.0 / max(reach.mean(), _LRD_FLOOR)
    scores = np.empty(n)
    for i in range(n):
        scores[i] = lrd[neighbor_idx[i]].mean() / lrd[i]
    return ScoreVector(scores, method="lof", params={"k": k})
