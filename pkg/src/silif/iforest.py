"""Isolation forest with per-tree path lengths exposed.

Trees are grown by recursive uniform-random splits on subsamples drawn
without replacement, height-limited at ceil(log2(subsample)).  Scoring uses
the classic 2**(-mean_path / c(psi)) transform; the per-tree path-length
matrix that feeds the fingerprint layer is available via
:func:`path_length_matrix`, and the scalar score is computed from that same
matrix so the two views agree bit for bit.

Reproducibility: every tree owns a PCG64 generator keyed by
``SeedSequence(entropy=seed, spawn_key=(tree_index,))``, so results are
independent of whether trees are built serially or in parallel.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .base import ScoreVector

# Euler-Mascheroni constant used by the harmonic-number approximation.
_EULER_GAMMA = 0.5772156649

FOREST_FORMAT = "silif-forest"
FOREST_FORMAT_VERSION = 1


def c_factor(n: int) -> float:
    """Expected path length of an unsuccessful search in a binary tree of n points.

    Exact harmonic summation up to n = 1000, log approximation above.
    """
    n = int(n)
    if n < 1:
        raise ValueError("c_factor requires n >= 1")
    if n == 1:
        return 0.0
    if n <= 1000:
        harmonic = float(np.sum(1.0 / np.arange(1, n)))
    else:
        harmonic = math.log(n - 1) + _EULER_GAMMA
    return 2.0 * harmonic - 2.0 * (n - 1) / n


@lru_cache(maxsize=65536)
def _c_cached(n: int) -> float:
    return c_factor(n)


def _features(data) -> np.ndarray:
    """Accept a Dataset or a plain 2-D array."""
    X = data.features if hasattr(data, "features") else np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D feature matrix")
    return X


@dataclass
class IsolationTree:
    """Flat node arrays; ``feature < 0`` marks a leaf.

    ``size`` is the training sample count reaching each node and ``depth``
    the node's distance from the root.  Leaf thresholds are NaN.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def leaf_mask(self) -> np.ndarray:
        return self.feature < 0


@dataclass
class Forest:
    trees: list[IsolationTree]
    subsample: int
    c_psi: float
    seed: int
    n_features: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(tree_index,)))
    )


def _grow_tree(S: np.ndarray, height_limit: int, rng: np.random.Generator) -> IsolationTree:
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    sizes: list[int] = []
    depths: list[int] = []

    def grow(rows: np.ndarray, depth: int) -> int:
        node = len(features)
        features.append(-1)
        thresholds.append(math.nan)
        lefts.append(-1)
        rights.append(-1)
        sizes.append(int(rows.size))
        depths.append(depth)
        if rows.size <= 1 or depth >= height_limit:
            return node
        sub = S[rows]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if splittable.size == 0:
            return node  # constant subsample
        f = int(splittable[rng.integers(splittable.size)])
        thr = float(rng.uniform(lo[f], hi[f]))
        if thr <= lo[f]:
            thr = float(np.nextafter(lo[f], hi[f]))  # keep both children non-empty
        mask = sub[:, f] < thr
        left_id = grow(rows[mask], depth + 1)
        right_id = grow(rows[~mask], depth + 1)
        features[node] = f
        thresholds[node] = thr
        lefts[node] = left_id
        rights[node] = right_id
        return node

    grow(np.arange(S.shape[0]), 0)
    return IsolationTree(
        feature=np.array(features, dtype=np.int64),
        threshold=np.array(thresholds, dtype=float),
        left=np.array(lefts, dtype=np.int64),
        right=np.array(rights, dtype=np.int64),
        size=np.array(sizes, dtype=np.int64),
        depth=np.array(depths, dtype=np.int64),
        n_features=int(S.shape[1]),
    )


def fit(data, n_trees: int, subsample: int, seed: int) -> Forest:
    """Train ``n_trees`` isolation trees on per-tree subsamples.

    A ``subsample`` larger than the dataset is clamped to the dataset size
    (reported as a warning, not an error).
    """
    X = _features(data)
    n, d = X.shape
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if subsample < 2:
        raise ValueError("subsample must be >= 2")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    psi = subsample
    if psi > n:
        warnings.warn(
            f"subsample {psi} exceeds dataset size {n}; clamped to {n}", stacklevel=2
        )
        psi = n
    height_limit = math.ceil(math.log2(psi))
    trees = []
    for t in range(n_trees):
        rng = _tree_rng(seed, t)
        rows = rng.choice(n, size=psi, replace=False)
        trees.append(_grow_tree(X[rows], height_limit, rng))
    return Forest(trees=trees, subsample=psi, c_psi=c_factor(psi), seed=seed, n_features=d)


def path_length(tree: IsolationTree, point) -> float:
    """Depth of the leaf reached by ``point`` plus the c(m) leaf adjustment."""
    p = np.asarray(point, dtype=float)
    if p.ndim != 1 or p.shape[0] != tree.n_features:
        raise ValueError(
            f"point has arity {p.shape[0] if p.ndim == 1 else p.shape}, "
            f"tree expects {tree.n_features}"
        )
    node = 0
    while tree.feature[node] >= 0:
        if p[tree.feature[node]] < tree.threshold[node]:
            node = int(tree.left[node])
        else:
            node = int(tree.right[node])
    return float(tree.depth[node]) + _c_cached(int(tree.size[node]))


def _tree_path_lengths(tree: IsolationTree, X: np.ndarray) -> np.ndarray:
    """Path lengths of every row of X in one tree (frontier descent)."""
    out = np.empty(X.shape[0], dtype=float)
    leaf_value = tree.depth.astype(float).copy()
    for node in np.flatnonzero(tree.leaf_mask()):
        leaf_value[node] += _c_cached(int(tree.size[node]))
    stack: list[tuple[int, np.ndarray]] = [(0, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        f = int(tree.feature[node])
        if f < 0:
            out[idx] = leaf_value[node]
            continue
        mask = X[idx, f] < tree.threshold[node]
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if left_idx.size:
            stack.append((int(tree.left[node]), left_idx))
        if right_idx.size:
            stack.append((int(tree.right[node]), right_idx))
    return out


def path_length_matrix(forest: Forest, data) -> np.ndarray:
    """N x T matrix of per-tree path lengths."""
    X = _features(data)
    if X.shape[1] != forest.n_features:
        raise ValueError(
            f"data has {X.shape[1]} features, forest expects {forest.n_features}"
        )
    H = np.empty((X.shape[0], forest.n_trees), dtype=float)
    for t, tree in enumerate(forest.trees):
        H[:, t] = _tree_path_lengths(tree, X)
    return H


def scores_from_path_lengths(forest: Forest, H: np.ndarray) -> ScoreVector:
    """Map a path-length matrix to anomaly scores 2**(-mean_path / c(psi))."""
    hbar = H.mean(axis=1)
    scores = np.power(2.0, -hbar / forest.c_psi)
    return ScoreVector(
        scores,
        method="iforest",
        params={"n_trees": forest.n_trees, "subsample": forest.subsample},
        seed=forest.seed,
    )


def score(forest: Forest, data) -> ScoreVector:
    """Anomaly scores in (0, 1); higher means more anomalous."""
    return scores_from_path_lengths(forest, path_length_matrix(forest, data))


def save_forest(forest: Forest, path) -> None:
    """Persist a forest as JSON: header plus flat node arrays per tree.

    Leaf thresholds are stored as 0.0 (they are unused; ``feature == -1``
    marks leaves) so the file is strict JSON.
    """
    doc = {
        "format": FOREST_FORMAT,
        "version": FOREST_FORMAT_VERSION,
        "n_trees": forest.n_trees,
        "subsample": forest.subsample,
        "seed": forest.seed,
        "n_features": forest.n_features,
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": np.where(tree.leaf_mask(), 0.0, tree.threshold).tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "size": tree.size.tolist(),
                "depth": tree.depth.tolist(),
            }
            for tree in forest.trees
        ],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_forest(path) -> Forest:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != FOREST_FORMAT:
        raise ValueError(f"{path}: not a {FOREST_FORMAT} file")
    trees = []
    for rec in doc["trees"]:
        feature = np.array(rec["feature"], dtype=np.int64)
        threshold = np.array(rec["threshold"], dtype=float)
        threshold[feature < 0] = np.nan
        trees.append(
            IsolationTree(
                feature=feature,
                threshold=threshold,
                left=np.array(rec["left"], dtype=np.int64),
                right=np.array(rec["right"], dtype=np.int64),
                size=np.array(rec["size"], dtype=np.int64),
                depth=np.array(rec["depth"], dtype=np.int64),
                n_features=int(doc["n_features"]),
            )
        )
    return Forest(
        trees=trees,
        subsample=int(doc["subsample"]),
        c_psi=c_factor(int(doc["subsample"])),
        seed=int(doc["seed"]),
        n_features=int(doc["n_features"]),
    )
