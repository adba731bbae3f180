"""Silhouette-augmented isolation forest scoring.

The augmentation asks a second question of each point: given how the forest
isolated it, does its pattern of isolation match any of the structural groups
found by clustering the fingerprints?  A centroid-based silhouette
approximation answers cheaply: with a = distance to the own centroid and
b = the closest rival centroid, the anomaly contribution is
1 - (b - a) / max(a, b), which lives in [0, 2].  The final score blends the
z-scored base and silhouette signals with a single weight alpha; alpha = 0
recovers the plain isolation-forest ranking.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import fingerprint, iforest
from .base import ScoreVector, as_score_array
from .metrics import zscore

EXACT_SILHOUETTE_MAX_POINTS = 10_000


@dataclass(frozen=True)
class SilifParams:
    """Hyperparameters for the combined scorer; alpha = 0 reduces to plain IF."""

    seed: int
    alpha: float = 1.0
    k: int = 8
    n_trees: int = 100
    subsample: int = 256
    kmeans_mode: str = "auto"
    batch: int = 1024

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


def silhouette_contribution(m: fingerprint.FingerprintMatrix, model: fingerprint.ClusterModel) -> ScoreVector:
    """Centroid-approximated silhouette anomaly contribution in [0, 2].

    0 means a perfect fit to the assigned group, 2 means the point sits on a
    rival centroid.  The degenerate a = b = 0 case is defined as 1.
    """
    if not m.standardized:
        raise ValueError("silhouette_contribution requires a standardized matrix")
    if model.k < 2:
        raise ValueError("silhouette_contribution requires at least 2 clusters")
    X = m.values
    n = X.shape[0]
    labels = np.asarray(model.labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ValueError("cluster model labels do not match the matrix rows")

    k = model.centroids.shape[0]
    dist = np.empty((n, k), dtype=float)
    block = fingerprint._chunk_rows(n, k * X.shape[1])
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = X[start:stop, None, :] - model.centroids[None, :, :]
        dist[start:stop] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    rows = np.arange(n)
    a = dist[rows, labels]
    masked = dist.copy()
    masked[rows, labels] = np.inf
    b = masked.min(axis=1)
    denom = np.maximum(a, b)
    sil = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    contrib = 1.0 - sil
    return ScoreVector(
        contrib,
        method="silhouette",
        params={"k": model.k, "mode": model.mode},
        seed=model.seed,
    )


def exact_silhouette(m, labels) -> np.ndarray:
    """Textbook per-point silhouette in [-1, 1]; quadratic, test-oracle only.

    a(i) is the mean distance to co-cluster points (self excluded), b(i) the
    smallest mean distance to any other cluster.  Singleton clusters get 0 by
    convention.  Guarded to 10,000 points.
    """
    X = m.values if isinstance(m, fingerprint.FingerprintMatrix) else np.asarray(m, float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n = X.shape[0]
    if n > EXACT_SILHOUETTE_MAX_POINTS:
        raise ValueError(
            f"exact_silhouette is quadratic and guarded to "
            f"{EXACT_SILHOUETTE_MAX_POINTS} points (got {n})"
        )
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ValueError("labels must be one per row")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("exact_silhouette requires at least 2 clusters")
    onehot = (labels[:, None] == uniq[None, :]).astype(float)
    counts = onehot.sum(axis=0)

    # Accumulate per-cluster distance sums in row blocks (never a full n x n).
    cluster_sums = np.empty((n, uniq.size), dtype=float)
    block = fingerprint._chunk_rows(n, n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = X[start:stop, None, :] - X[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        cluster_sums[start:stop] = d @ onehot

    own = np.searchsorted(uniq, labels)
    rows = np.arange(n)
    own_count = counts[own]
    out = np.zeros(n, dtype=float)
    multi = own_count > 1
    a = np.zeros(n)
    a[multi] = cluster_sums[rows[multi], own[multi]] / (own_count[multi] - 1)
    mean_other = cluster_sums / counts[None, :]
    mean_other[rows, own] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    valid = multi & (denom > 0)
    out[valid] = (b[valid] - a[valid]) / denom[valid]
    return out


def combine(s_if, s_sil, alpha: float, if_stats=None, sil_stats=None) -> ScoreVector:
    """z(s_if) + alpha * z(s_sil), standardized over the scored batch.

    For out-of-batch scoring, pass ``if_stats``/``sil_stats`` as (mean, std)
    pairs recorded at fit time to reuse the training normalization instead.
    A constant score vector (std 0) z-maps to all zeros.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    x = as_score_array(s_if)
    y = as_score_array(s_sil)
    if x.shape != y.shape:
        raise ValueError(f"score lengths differ: {x.shape[0]} vs {y.shape[0]}")

    def _z(values, stats):
        if stats is None:
            return zscore(values)
        mean, std = stats
        if std == 0:
            return np.zeros_like(values)
        return (values - mean) / std

    combined = _z(x, if_stats) + alpha * _z(y, sil_stats)
    seed = s_if.seed if isinstance(s_if, ScoreVector) else None
    return ScoreVector(combined, method="silif", params={"alpha": alpha}, seed=seed)


def silif_score(data, params: SilifParams):
    """Full pipeline: forest, fingerprints, clustering, silhouette, blend.

    Returns ``(scores, forest, cluster_model)`` so callers can persist the
    fitted models instead of refitting.  Deterministic per (data, params).
    """
    forest = iforest.fit(data, params.n_trees, params.subsample, params.seed)
    raw = fingerprint.extract_fingerprints(forest, data)
    s_if = iforest.scores_from_path_lengths(forest, raw.values)
    std = fingerprint.standardize_columns(raw)
    model = fingerprint.kmeans_fit(
        std, params.k, params.seed, mode=params.kmeans_mode, batch=params.batch
    )
    s_sil = silhouette_contribution(std, model)
    combined = combine(s_if, s_sil, params.alpha)
    scores = ScoreVector(
        combined.scores, method="silif", params=asdict(params), seed=params.seed
    )
    return scores, forest, model
