"""Command-line benchmark runner (installed as ``silif-bench``)."""

from __future__ import annotations

import argparse
import sys

from .dataset import DatasetConfig
from .harness import KNOWN_METHODS, ExperimentConfig, emit_report, run_experiment


def _parse_list(text: str, cast):
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    try:
        return tuple(cast(part) for part in items)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_synthetic(text: str):
    parts = _parse_list(text, int)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected n_normal,n_anomaly,dims")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="silif-bench",
        description=(
            "Multi-seed anomaly-detection benchmark: isolation forest, the "
            "silhouette-augmented variant (with an alpha sweep), and classical "
            "baselines, reported as CSV files."
        ),
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="PATH", help="transaction CSV to load")
    src.add_argument(
        "--synthetic",
        type=_parse_synthetic,
        metavar="N_NORMAL,N_ANOMALY,DIMS",
        help="generate a seeded synthetic dataset instead of loading a CSV",
    )
    p.add_argument("--config", metavar="FILE", help="column-mapping config (key = value lines)")
    p.add_argument(
        "--methods",
        type=lambda s: _parse_list(s, str),
        default=("iforest", "silif", "hbos", "ecod", "kmeans"),
        help=f"comma list from: {', '.join(KNOWN_METHODS)}",
    )
    p.add_argument(
        "--alphas",
        type=lambda s: _parse_list(s, float),
        default=(0.0, 0.25, 0.5, 1.0, 2.0, 4.0),
        help="silhouette weights for the combined scorer (sweeps must include 0)",
    )
    p.add_argument(
        "--seeds",
        type=lambda s: _parse_list(s, int),
        default=(42, 43, 44, 45, 46),
        help="random seeds, one full run per seed",
    )
    p.add_argument("--trees", type=int, default=100, help="number of isolation trees")
    p.add_argument("--subsample", type=int, default=256, help="per-tree subsample size")
    p.add_argument("--k", type=int, default=8, help="number of clusters")
    p.add_argument(
        "--kmeans-mode",
        choices=("full", "minibatch", "auto"),
        default="auto",
        help="clustering mode (auto switches to minibatch above 50k rows)",
    )
    p.add_argument("--knn-k", type=int, default=5, help="neighbors for the kNN baseline")
    p.add_argument("--lof-k", type=int, default=20, help="neighbors for the LOF baseline")
    p.add_argument("--hbos-bins", type=int, default=20, help="histogram bins for HBOS")
    p.add_argument(
        "--subsample-rows",
        type=int,
        default=None,
        metavar="N",
        help="seeded uniform row subsample applied per seed before scoring",
    )
    p.add_argument("--out", default="results", metavar="DIR", help="report output directory")
    p.add_argument(
        "--save-models",
        action="store_true",
        help="persist the fitted forest and cluster model per seed under OUT/models",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        dataset_config = None
        if args.data is not None:
            if args.config is None:
                raise ValueError("--config is required with --data")
            dataset_config = DatasetConfig.from_file(args.config)
        config = ExperimentConfig(
            synthetic=args.synthetic,
            data_path=args.data,
            dataset_config=dataset_config,
            methods=args.methods,
            alphas=args.alphas,
            seeds=args.seeds,
            n_trees=args.trees,
            subsample=args.subsample,
            k=args.k,
            kmeans_mode=args.kmeans_mode,
            knn_k=args.knn_k,
            lof_k=args.lof_k,
            hbos_bins=args.hbos_bins,
            subsample_rows=args.subsample_rows,
            out_dir=args.out,
        )
        model_dir = f"{args.out}/models" if args.save_models else None
        table = run_experiment(config, model_dir=model_dir)
        files = emit_report(table, args.out)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"silif-bench: error: {exc}", file=sys.stderr)
        return 1

    print("note: distance-based baselines (kmeans, knn, lof) use z-scored features")
    for row in table.aggregates:
        alpha = "" if row.alpha is None else f" alpha={row.alpha:g}"
        roc = row.means.get("auc_roc")
        pr = row.means.get("auc_pr")
        if roc is None or pr is None:
            continue
        print(
            f"{row.method}{alpha}: auc_roc={roc:.4f}+-{row.stds['auc_roc']:.4f} "
            f"auc_pr={pr:.4f}+-{row.stds['auc_pr']:.4f} ({row.n_seeds} seeds)"
        )
    skipped = sorted({r.method for r in table.results if r.status == "skipped-guard"})
    if skipped:
        print(f"skipped by size guard: {', '.join(skipped)}")
    print(f"reports written to {files['per_seed'].parent}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
