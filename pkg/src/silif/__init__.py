"""Silhouette-augmented isolation forest anomaly detection.

The package trains a standard isolation forest, keeps the per-tree
path-length fingerprint of every point, clusters the fingerprints into
structural groups, and blends a centroid-silhouette anomaly signal into the
base score with a single weight alpha.  Classical baselines (HBOS, ECOD,
k-means distance, kNN distance, LOF), ranking metrics, and a seeded
multi-seed benchmark harness round out the toolbox.
"""

from ._version import __version__
from .base import ScoreVector
from .baselines import (
    ecod_score,
    hbos_score,
    kmeans_distance_score,
    knn_score,
    lof_score,
)
from .dataset import (
    Dataset,
    DatasetConfig,
    RawTable,
    generate_synthetic,
    load_csv,
    preprocess,
    sign_log,
)
from .fingerprint import (
    ClusterModel,
    FingerprintMatrix,
    assign,
    extract_fingerprints,
    kmeans_fit,
    load_cluster_model,
    save_cluster_model,
    standardize_columns,
)
from .harness import (
    EvalResult,
    ExperimentConfig,
    PairedComparison,
    ResultsTable,
    alpha_sweep,
    emit_report,
    run_experiment,
)
from .iforest import Forest, IsolationTree, c_factor, fit, load_forest, path_length, save_forest, score
from .metrics import (
    TTestResult,
    auc_pr,
    auc_roc,
    betainc,
    paired_t_test,
    precision_at_k,
    student_t_cdf,
    zscore,
)
from .scoring import (
    SilifParams,
    combine,
    exact_silhouette,
    silhouette_contribution,
    silif_score,
)

__all__ = [
    "__version__",
    "ScoreVector",
    "Dataset",
    "DatasetConfig",
    "RawTable",
    "generate_synthetic",
    "load_csv",
    "preprocess",
    "sign_log",
    "Forest",
    "IsolationTree",
    "c_factor",
    "fit",
    "path_length",
    "score",
    "save_forest",
    "load_forest",
    "FingerprintMatrix",
    "ClusterModel",
    "extract_fingerprints",
    "standardize_columns",
    "kmeans_fit",
    "assign",
    "save_cluster_model",
    "load_cluster_model",
    "SilifParams",
    "silhouette_contribution",
    "exact_silhouette",
    "combine",
    "silif_score",
    "hbos_score",
    "ecod_score",
    "kmeans_distance_score",
    "knn_score",
    "lof_score",
    "auc_roc",
    "auc_pr",
    "precision_at_k",
    "paired_t_test",
    "TTestResult",
    "zscore",
    "betainc",
    "student_t_cdf",
    "ExperimentConfig",
    "EvalResult",
    "PairedComparison",
    "ResultsTable",
    "run_experiment",
    "alpha_sweep",
    "emit_report",
]
