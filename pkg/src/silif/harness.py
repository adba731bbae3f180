"""Multi-seed benchmark harness: run detectors, aggregate, compare, report.

One experiment crosses the requested methods with the seed list; the combined
scorer additionally crosses its alpha list, reusing the fitted forest and
cluster model per seed since only the final blend depends on alpha (a naive
per-alpha refit would produce bit-identical scores because the models are
seed-deterministic).  Results land in CSV reports plus a JSON config
snapshot.  The per-seed results CSV is byte-deterministic for a given config;
wall-clock timings therefore live in a sibling ``timings.csv``.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines, fingerprint, iforest
from ._version import __version__
from .base import ScoreVector
from .dataset import Dataset, DatasetConfig, generate_synthetic, load_csv, preprocess
from .metrics import auc_pr, auc_roc, paired_t_test, precision_at_k
from .scoring import combine, silhouette_contribution

PRECISION_KS = (50, 100, 500, 1000)
KNOWN_METHODS = ("iforest", "silif", "hbos", "ecod", "kmeans", "knn", "lof")

PER_SEED_COLUMNS = (
    "method",
    "alpha",
    "seed",
    "auc_roc",
    "auc_pr",
    "p_at_50",
    "p_at_100",
    "p_at_500",
    "p_at_1000",
    "status",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run: data source, methods, alpha grid, seeds, model sizes."""

    synthetic: tuple[int, int, int] | None = None
    data_path: str | None = None
    dataset_config: DatasetConfig | None = None
    methods: tuple[str, ...] = ("iforest", "silif")
    alphas: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)
    seeds: tuple[int, ...] = (42, 43, 44, 45, 46)
    n_trees: int = 100
    subsample: int = 256
    k: int = 8
    kmeans_mode: str = "auto"
    batch: int = 1024
    knn_k: int = 5
    lof_k: int = 20
    hbos_bins: int = 20
    subsample_rows: int | None = None
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        unknown = [m for m in self.methods if m not in KNOWN_METHODS]
        if unknown:
            raise ValueError(
                f"unknown method(s): {', '.join(unknown)}; known: {', '.join(KNOWN_METHODS)}"
            )
        if (self.synthetic is None) == (self.data_path is None):
            raise ValueError("exactly one of synthetic spec or data path is required")
        if self.data_path is not None and self.dataset_config is None:
            raise ValueError("a DatasetConfig is required when loading a CSV")
        if "silif" in self.methods:
            if not self.alphas:
                raise ValueError("silif requires a non-empty alpha list")
            if len(self.alphas) > 1 and 0.0 not in self.alphas:
                raise ValueError("an alpha sweep must include 0 (the plain-IF anchor)")

    def snapshot(self) -> dict:
        doc = asdict(self)
        if self.dataset_config is not None:
            doc["dataset_config"] = asdict(self.dataset_config)
        return doc


@dataclass
class EvalResult:
    method: str
    alpha: float | None
    seed: int
    auc_roc: float | None = None
    auc_pr: float | None = None
    p_at: dict[int, float | None] = field(default_factory=dict)
    seconds: float | None = None
    status: str = "ok"


@dataclass
class AggregateRow:
    method: str
    alpha: float | None
    n_seeds: int
    means: dict[str, float]
    stds: dict[str, float]


@dataclass
class PairedComparison:
    method_a: str
    method_b: str
    metric: str
    pairs: list[tuple[int, float, float]]  # (seed, a, b)
    mean_diff: float
    wins: int
    n_seeds: int
    t_stat: float
    p_value: float


@dataclass
class SweepRow:
    alpha: float
    auc_roc_mean: float
    auc_roc_std: float
    auc_pr_mean: float
    auc_pr_std: float


@dataclass
class ResultsTable:
    results: list[EvalResult]
    aggregates: list[AggregateRow]
    paired: list[PairedComparison]
    sweep: list[SweepRow]
    config_snapshot: dict
    version: str = __version__


def _subset_rows(data: Dataset, idx: np.ndarray) -> Dataset:
    ids = None if data.customer_ids is None else data.customer_ids[idx]
    return Dataset(data.features[idx], data.labels[idx], ids, data.feature_names)


def _load_base_data(config: ExperimentConfig) -> Dataset | None:
    if config.data_path is None:
        return None
    raw = load_csv(config.data_path, config.dataset_config)
    return preprocess(raw, config.dataset_config)


def _data_for_seed(config: ExperimentConfig, base: Dataset | None, seed: int) -> Dataset:
    if config.synthetic is not None:
        n_normal, n_anomaly, dims = config.synthetic
        data = generate_synthetic(n_normal, n_anomaly, dims, seed)
    else:
        data = base
    if config.subsample_rows is not None and config.subsample_rows < len(data):
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(data), size=config.subsample_rows, replace=False))
        data = _subset_rows(data, idx)
    return data


def _evaluate(sv: ScoreVector, labels: np.ndarray, row: EvalResult) -> None:
    row.auc_roc = auc_roc(sv, labels)
    row.auc_pr = auc_pr(sv, labels)
    row.p_at = {
        kk: (precision_at_k(sv, labels, kk) if kk <= len(labels) else None)
        for kk in PRECISION_KS
    }


def _zscored_features(data: Dataset) -> np.ndarray:
    X = data.features
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    safe = np.where(stds > 0, stds, 1.0)
    Z = (X - means) / safe
    Z[:, stds == 0] = 0.0
    return Z


def _run_baseline(method: str, data: Dataset, seed: int, config: ExperimentConfig) -> ScoreVector:
    if method == "iforest":
        forest = iforest.fit(data, config.n_trees, config.subsample, seed)
        return iforest.score(forest, data)
    if method == "hbos":
        return baselines.hbos_score(data, config.hbos_bins)
    if method == "ecod":
        return baselines.ecod_score(data)
    if method == "kmeans":
        return baselines.kmeans_distance_score(data, config.k, seed)
    # The neighbor methods get a z-scored feature view so no single feature
    # dominates the Euclidean metric (recorded in the run config snapshot).
    if method == "knn":
        return baselines.knn_score(_zscored_features(data), config.knn_k)
    if method == "lof":
        return baselines.lof_score(_zscored_features(data), config.lof_k)
    raise ValueError(f"unknown method {method!r}")


def _run_silif_seed(
    data: Dataset,
    seed: int,
    config: ExperimentConfig,
    labels: np.ndarray,
    model_dir: Path | None,
) -> list[EvalResult]:
    rows = []
    try:
        t0 = time.perf_counter()
        forest = iforest.fit(data, config.n_trees, config.subsample, seed)
        raw = fingerprint.extract_fingerprints(forest, data)
        s_if = iforest.scores_from_path_lengths(forest, raw.values)
        std = fingerprint.standardize_columns(raw)
        model = fingerprint.kmeans_fit(
            std, config.k, seed, mode=config.kmeans_mode, batch=config.batch
        )
        s_sil = silhouette_contribution(std, model)
        fit_seconds = time.perf_counter() - t0
        if model_dir is not None:
            model_dir.mkdir(parents=True, exist_ok=True)
            iforest.save_forest(forest, model_dir / f"forest_seed{seed}.json")
            fingerprint.save_cluster_model(model, model_dir / f"clusters_seed{seed}.json")
    except Exception as exc:  # pragma: no cover - defensive per-row recording
        for alpha in config.alphas:
            rows.append(
                EvalResult("silif", alpha, seed, status=f"error: {exc}")
            )
        return rows
    for alpha in config.alphas:
        row = EvalResult("silif", alpha, seed)
        try:
            t1 = time.perf_counter()
            sv = combine(s_if, s_sil, alpha)
            _evaluate(sv, labels, row)
            row.seconds = fit_seconds + (time.perf_counter() - t1)
        except Exception as exc:
            row.status = f"error: {exc}"
        rows.append(row)
    return rows


def run_experiment(config: ExperimentConfig, model_dir=None) -> ResultsTable:
    """Fit and evaluate every requested (method, alpha, seed) cell.

    kNN and LOF are recorded as ``skipped-guard`` rows above their 100,000-row
    limit; a failing method is recorded per-row and the run continues.  Pass
    ``model_dir`` to persist the fitted silif models per seed.
    """
    base = _load_base_data(config)
    model_dir = None if model_dir is None else Path(model_dir)
    results: list[EvalResult] = []
    for seed in config.seeds:
        data = _data_for_seed(config, base, seed)
        labels = data.labels
        for method in config.methods:
            if method == "silif":
                results.extend(_run_silif_seed(data, seed, config, labels, model_dir))
                continue
            if method in ("knn", "lof") and len(data) > baselines.NEIGHBOR_GUARD:
                results.append(
                    EvalResult(method, None, seed, status="skipped-guard")
                )
                continue
            row = EvalResult(method, None, seed)
            try:
                t0 = time.perf_counter()
                sv = _run_baseline(method, data, seed, config)
                _evaluate(sv, labels, row)
                row.seconds = time.perf_counter() - t0
            except Exception as exc:
                row.status = f"error: {exc}"
            results.append(row)

    results.sort(key=_row_sort_key)
    aggregates = _aggregate(results)
    paired = _paired_comparisons(results, config)
    sweep = _sweep_rows(results, config)
    return ResultsTable(
        results=results,
        aggregates=aggregates,
        paired=paired,
        sweep=sweep,
        config_snapshot=_snapshot_with_notes(config),
    )


def alpha_sweep(config: ExperimentConfig, model_dir=None) -> ResultsTable:
    """Run the combined scorer across its alpha grid (models reused per seed)."""
    if not config.alphas:
        raise ValueError("alpha_sweep requires a non-empty alpha list")
    if 0.0 not in config.alphas:
        raise ValueError("alpha_sweep requires alpha=0 (the plain-IF anchor)")
    return run_experiment(replace(config, methods=("silif",)), model_dir=model_dir)


def _snapshot_with_notes(config: ExperimentConfig) -> dict:
    doc = config.snapshot()
    doc["version"] = __version__
    # Deviation lever: the distance-based baselines see z-scored features.
    doc["distance_baselines_standardized"] = True
    doc["auc_pr_definition"] = "average_precision"
    return doc


def _row_sort_key(row: EvalResult):
    return (row.method, -1.0 if row.alpha is None else row.alpha, row.seed)


_METRIC_NAMES = ("auc_roc", "auc_pr", "p_at_50", "p_at_100", "p_at_500", "p_at_1000")


def _metric_value(row: EvalResult, name: str) -> float | None:
    if name.startswith("p_at_"):
        return row.p_at.get(int(name.rsplit("_", 1)[1]))
    return getattr(row, name)


def _aggregate(results: list[EvalResult]) -> list[AggregateRow]:
    groups: dict[tuple[str, float | None], list[EvalResult]] = {}
    for row in results:
        if row.status != "ok":
            continue
        groups.setdefault((row.method, row.alpha), []).append(row)
    out = []
    for (method, alpha), rows in sorted(
        groups.items(), key=lambda kv: (kv[0][0], -1.0 if kv[0][1] is None else kv[0][1])
    ):
        means: dict[str, float] = {}
        stds: dict[str, float] = {}
        for name in _METRIC_NAMES:
            vals = [_metric_value(r, name) for r in rows]
            vals = [v for v in vals if v is not None]
            if not vals:
                continue
            arr = np.array(vals, dtype=float)
            means[name] = float(arr.mean())
            stds[name] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        out.append(AggregateRow(method, alpha, len(rows), means, stds))
    return out


def _anchor_alpha(config: ExperimentConfig) -> float | None:
    if 1.0 in config.alphas:
        return 1.0
    for a in config.alphas:
        if a > 0:
            return a
    return None


def _collect_pairs(results, method_a, alpha_a, method_b, alpha_b, metric):
    by_seed_a = {
        r.seed: _metric_value(r, metric)
        for r in results
        if r.method == method_a and r.alpha == alpha_a and r.status == "ok"
    }
    by_seed_b = {
        r.seed: _metric_value(r, metric)
        for r in results
        if r.method == method_b and r.alpha == alpha_b and r.status == "ok"
    }
    pairs = [
        (seed, by_seed_a[seed], by_seed_b[seed])
        for seed in sorted(set(by_seed_a) & set(by_seed_b))
        if by_seed_a[seed] is not None and by_seed_b[seed] is not None
    ]
    return pairs


def _paired_row(name_a, name_b, pairs, metric) -> PairedComparison:
    a = np.array([p[1] for p in pairs])
    b = np.array([p[2] for p in pairs])
    tt = paired_t_test(a, b)
    return PairedComparison(
        method_a=name_a,
        method_b=name_b,
        metric=metric,
        pairs=pairs,
        mean_diff=float((a - b).mean()),
        wins=tt.wins,
        n_seeds=len(pairs),
        t_stat=tt.t,
        p_value=tt.p,
    )


def _paired_comparisons(results: list[EvalResult], config: ExperimentConfig) -> list[PairedComparison]:
    out: list[PairedComparison] = []
    if "silif" not in config.methods:
        return out
    anchor = _anchor_alpha(config)
    metric = "auc_pr"
    if anchor is not None:
        label_a = f"silif(alpha={anchor:g})"
        for method in config.methods:
            if method == "silif":
                continue
            pairs = _collect_pairs(results, "silif", anchor, method, None, metric)
            if len(pairs) >= 2:
                out.append(_paired_row(label_a, method, pairs, metric))
    if 0.0 in config.alphas:
        for alpha in config.alphas:
            if alpha <= 0:
                continue
            pairs = _collect_pairs(results, "silif", alpha, "silif", 0.0, metric)
            if len(pairs) >= 2:
                out.append(
                    _paired_row(f"silif(alpha={alpha:g})", "silif(alpha=0)", pairs, metric)
                )
    return out


def _sweep_rows(results: list[EvalResult], config: ExperimentConfig) -> list[SweepRow]:
    if "silif" not in config.methods or len(config.alphas) < 2:
        return []
    out = []
    for alpha in sorted(set(config.alphas)):
        rows = [
            r
            for r in results
            if r.method == "silif" and r.alpha == alpha and r.status == "ok"
        ]
        if not rows:
            continue
        roc = np.array([r.auc_roc for r in rows], dtype=float)
        pr = np.array([r.auc_pr for r in rows], dtype=float)
        out.append(
            SweepRow(
                alpha=alpha,
                auc_roc_mean=float(roc.mean()),
                auc_roc_std=float(roc.std(ddof=1)) if roc.size > 1 else 0.0,
                auc_pr_mean=float(pr.mean()),
                auc_pr_std=float(pr.std(ddof=1)) if pr.size > 1 else 0.0,
            )
        )
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise RuntimeError(f"failed writing report file {path}: {exc}") from exc


def emit_report(table: ResultsTable, out_dir) -> dict[str, Path]:
    """Write the per-seed, timing, aggregate, paired, and sweep CSV reports.

    Returns the mapping of report name to file path.  The per-seed results
    file is byte-identical across reruns of the same config; timings are kept
    in their own file because wall-clock time is not reproducible.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot create output directory {out}: {exc}") from exc

    files = {
        "per_seed": out / "per_seed_results.csv",
        "timings": out / "timings.csv",
        "aggregate": out / "aggregate.csv",
        "paired": out / "paired_comparisons.csv",
        "sweep": out / "sweep.csv",
        "config": out / "run_config.json",
    }

    _write_csv(
        files["per_seed"],
        PER_SEED_COLUMNS,
        (
            (
                r.method,
                r.alpha,
                r.seed,
                r.auc_roc,
                r.auc_pr,
                r.p_at.get(50),
                r.p_at.get(100),
                r.p_at.get(500),
                r.p_at.get(1000),
                r.status,
            )
            for r in table.results
        ),
    )
    _write_csv(
        files["timings"],
        ("method", "alpha", "seed", "seconds"),
        ((r.method, r.alpha, r.seed, r.seconds) for r in table.results),
    )
    agg_header = ["method", "alpha", "n_seeds"]
    for name in _METRIC_NAMES:
        agg_header += [f"{name}_mean", f"{name}_std"]
    agg_rows = []
    for row in table.aggregates:
        cells = [row.method, row.alpha, row.n_seeds]
        for name in _METRIC_NAMES:
            cells += [row.means.get(name), row.stds.get(name)]
        agg_rows.append(cells)
    _write_csv(files["aggregate"], agg_header, agg_rows)
    _write_csv(
        files["paired"],
        ("method_a", "method_b", "metric", "mean_diff", "wins", "t_stat", "p_value"),
        (
            (
                c.method_a,
                c.method_b,
                c.metric,
                c.mean_diff,
                f"{c.wins}/{c.n_seeds}",
                c.t_stat,
                c.p_value,
            )
            for c in table.paired
        ),
    )
    _write_csv(
        files["sweep"],
        ("alpha", "auc_roc_mean", "auc_roc_std", "auc_pr_mean", "auc_pr_std"),
        (
            (s.alpha, s.auc_roc_mean, s.auc_roc_std, s.auc_pr_mean, s.auc_pr_std)
            for s in table.sweep
        ),
    )
    try:
        files["config"].write_text(
            json.dumps(table.config_snapshot, indent=2, sort_keys=True), encoding="utf-8"
        )
    except OSError as exc:
        raise RuntimeError(f"failed writing {files['config']}: {exc}") from exc
    return files
