"""Path-length fingerprints and their k-means clustering.

A fingerprint is the vector of per-tree path lengths for one point.  The
matrix is standardized column-wise (population std; zero-variance columns map
to all-zero) and clustered with k-means++ seeded Lloyd iterations or, for
large N, the per-batch mini-batch update with per-centroid learning rates
1/count.  Both modes are deterministic for a given seed; serial vs parallel
execution cannot change the result because there is no shared mutable state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import iforest

# Above this many rows, mode="auto" switches from full Lloyd to mini-batch.
AUTO_MINIBATCH_THRESHOLD = 50_000

CLUSTER_FORMAT = "silif-clusters"
CLUSTER_FORMAT_VERSION = 1


@dataclass
class FingerprintMatrix:
    """N x T matrix of per-tree path lengths, raw or column-standardized."""

    values: np.ndarray
    standardized: bool = False
    col_means: np.ndarray | None = None
    col_stds: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("fingerprint matrix must be 2-D")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass
class ClusterModel:
    """K centroids plus the training assignment and its inertia.

    ``col_means``/``col_stds`` record the standardization applied to the
    matrix the model was fit on, so new data can be mapped into the same
    space before :func:`assign`.
    """

    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    k: int
    seed: int
    mode: str
    col_means: np.ndarray | None = None
    col_stds: np.ndarray | None = None
    inertia_history: list[float] = field(default_factory=list)


def extract_fingerprints(forest: iforest.Forest, data) -> FingerprintMatrix:
    """Raw fingerprints; entry (i, t) is the path length of point i in tree t."""
    return FingerprintMatrix(iforest.path_length_matrix(forest, data), standardized=False)


def standardize_columns(m: FingerprintMatrix) -> FingerprintMatrix:
    """Column z-scoring with population std; constant columns become zero."""
    v = m.values
    means = v.mean(axis=0)
    stds = v.std(axis=0)
    safe = np.where(stds > 0, stds, 1.0)
    out = (v - means) / safe
    out[:, stds == 0] = 0.0
    return FingerprintMatrix(out, standardized=True, col_means=means, col_stds=stds)


def apply_standardization(values, col_means, col_stds) -> FingerprintMatrix:
    """Standardize new data with stored training statistics."""
    v = np.asarray(values, dtype=float)
    stds = np.asarray(col_stds, dtype=float)
    safe = np.where(stds > 0, stds, 1.0)
    out = (v - np.asarray(col_means, dtype=float)) / safe
    out[:, stds == 0] = 0.0
    return FingerprintMatrix(out, standardized=True, col_means=np.asarray(col_means, float), col_stds=stds)


def _chunk_rows(n: int, width: int) -> int:
    # Keep the (block x K x T) distance temporaries around a few tens of MB.
    return max(1, min(n, int(4_000_000 / max(width, 1))))


def _nearest(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels (argmin distance, ties to the lowest index) and squared distances."""
    n = X.shape[0]
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=float)
    block = _chunk_rows(n, k * X.shape[1])
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = X[start:stop, None, :] - centroids[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        lab = np.argmin(dist2, axis=1)
        labels[start:stop] = lab
        d2[start:stop] = dist2[np.arange(stop - start), lab]
    return labels, d2


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; errors if the data has fewer than k distinct rows."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=float)
    centroids[0] = X[int(rng.integers(n))]
    diff = X - centroids[0]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise ValueError(
                f"data has only {j} distinct rows; k={k} is unachievable (max k={j})"
            )
        nxt = int(rng.choice(n, p=d2 / total))
        centroids[j] = X[nxt]
        diff = X - centroids[j]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return centroids


def _fix_empty_clusters(X, centroids, labels, d2):
    """Re-seed each empty cluster to the point currently farthest from its centroid."""
    counts = np.bincount(labels, minlength=centroids.shape[0])
    for c in np.flatnonzero(counts == 0):
        far = int(np.argmax(d2))
        centroids[c] = X[far]
        labels[far] = c
        d2[far] = 0.0
        counts = np.bincount(labels, minlength=centroids.shape[0])
    return centroids, labels, d2


def kmeans_fit(
    m: FingerprintMatrix,
    k: int,
    seed: int,
    mode: str = "auto",
    batch: int = 1024,
    max_iter: int = 300,
    tol: float = 1e-4,
    n_batches: int = 100,
) -> ClusterModel:
    """Cluster a standardized matrix into k groups.

    ``mode`` is ``full`` (Lloyd to convergence: max centroid shift < tol or
    ``max_iter`` sweeps), ``minibatch`` (``n_batches`` batches of size
    ``batch`` with 1/count learning rates, then one full labeling pass), or
    ``auto`` (mini-batch above 50,000 rows).
    """
    if not m.standardized:
        raise ValueError("kmeans_fit requires a standardized matrix")
    X = m.values
    n = X.shape[0]
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    if mode not in ("full", "minibatch", "auto"):
        raise ValueError(f"unknown kmeans mode {mode!r}")
    resolved = mode
    if mode == "auto":
        resolved = "minibatch" if n > AUTO_MINIBATCH_THRESHOLD else "full"

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(X, k, rng)
    history: list[float] = []

    if resolved == "full":
        for _ in range(max_iter):
            labels, d2 = _nearest(X, centroids)
            centroids, labels, d2 = _fix_empty_clusters(X, centroids, labels, d2)
            history.append(float(d2.sum()))
            counts = np.bincount(labels, minlength=k).astype(float)
            sums = np.zeros_like(centroids)
            np.add.at(sums, labels, X)
            new_centroids = sums / counts[:, None]
            shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
            centroids = new_centroids
            if shift < tol:
                break
    else:
        counts = np.zeros(k, dtype=float)
        batch = min(batch, n)
        for _ in range(n_batches):
            pick = rng.integers(0, n, size=batch)
            B = X[pick]
            lab, _ = _nearest(B, centroids)
            members = np.bincount(lab, minlength=k).astype(float)
            sums = np.zeros_like(centroids)
            np.add.at(sums, lab, B)
            hit = members > 0
            new_counts = counts + members
            centroids[hit] = (
                centroids[hit] * counts[hit, None] + sums[hit]
            ) / new_counts[hit, None]
            counts = new_counts

    labels, d2 = _nearest(X, centroids)
    centroids, labels, d2 = _fix_empty_clusters(X, centroids, labels, d2)
    inertia = float(d2.sum())
    history.append(inertia)
    return ClusterModel(
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        k=k,
        seed=seed,
        mode=resolved,
        col_means=m.col_means,
        col_stds=m.col_stds,
        inertia_history=history,
    )


def assign(model: ClusterModel, m: FingerprintMatrix) -> np.ndarray:
    """Nearest-centroid labels (Euclidean; ties go to the lowest index)."""
    if not m.standardized:
        raise ValueError("assign requires a standardized matrix")
    if m.values.shape[1] != model.centroids.shape[1]:
        raise ValueError(
            f"matrix has {m.values.shape[1]} columns, centroids have "
            f"{model.centroids.shape[1]}"
        )
    labels, _ = _nearest(m.values, model.centroids)
    return labels


def save_cluster_model(model: ClusterModel, path) -> None:
    doc = {
        "format": CLUSTER_FORMAT,
        "version": CLUSTER_FORMAT_VERSION,
        "k": model.k,
        "seed": model.seed,
        "mode": model.mode,
        "inertia": model.inertia,
        "centroids": model.centroids.tolist(),
        "labels": model.labels.tolist(),
        "col_means": None if model.col_means is None else np.asarray(model.col_means).tolist(),
        "col_stds": None if model.col_stds is None else np.asarray(model.col_stds).tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_cluster_model(path) -> ClusterModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CLUSTER_FORMAT:
        raise ValueError(f"{path}: not a {CLUSTER_FORMAT} file")
    return ClusterModel(
        centroids=np.array(doc["centroids"], dtype=float),
        labels=np.array(doc["labels"], dtype=np.int64),
        inertia=float(doc["inertia"]),
        k=int(doc["k"]),
        seed=int(doc["seed"]),
        mode=str(doc["mode"]),
        col_means=None if doc["col_means"] is None else np.array(doc["col_means"], float),
        col_stds=None if doc["col_stds"] is None else np.array(doc["col_stds"], float),
    )
