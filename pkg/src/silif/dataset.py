"""Transaction dataset ingestion, preprocessing, and a seeded synthetic generator.

The CSV pipeline expects a header row and works off a :class:`DatasetConfig`
naming the amount, transaction-type, numeric-feature, customer-id, and label
columns.  Preprocessing drops thin customer histories, applies sign-preserving
log scaling to the monetary columns, and frequency-rank encodes the
transaction type.  Labels are carried for evaluation only and are never read
by any scoring code (the :class:`Dataset` keeps an access counter so tests can
prove it).
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}


def sign_log(x):
    """Sign-preserving log scaling: sign(x) * ln(1 + |x|).

    Odd and monotone increasing; maps 0 to 0.  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("sign_log requires finite input")
    out = np.sign(arr) * np.log1p(np.abs(arr))
    if arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class DatasetConfig:
    """Column mapping for a transaction CSV.

    ``numeric_columns`` must name exactly four columns (the compact
    per-transaction representation used throughout the package).
    """

    amount_column: str
    type_column: str
    numeric_columns: tuple[str, ...]
    customer_column: str
    label_column: str
    min_transactions: int = 5

    def __post_init__(self):
        object.__setattr__(self, "numeric_columns", tuple(self.numeric_columns))
        if len(self.numeric_columns) != 4:
            raise ValueError(
                f"exactly 4 numeric feature columns required, got {len(self.numeric_columns)}"
            )
        if self.min_transactions < 1:
            raise ValueError("min_transactions must be >= 1")

    def all_columns(self) -> tuple[str, ...]:
        return (
            self.amount_column,
            self.type_column,
            *self.numeric_columns,
            self.customer_column,
            self.label_column,
        )

    @classmethod
    def from_file(cls, path) -> "DatasetConfig":
        """Parse a flat ``key = value`` config file ('#' starts a comment)."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        pairs: dict[str, str] = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            pairs[key] = value
        known = {
            "amount_column",
            "type_column",
            "numeric_columns",
            "customer_column",
            "label_column",
            "min_transactions",
        }
        unknown = sorted(set(pairs) - known)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        missing = sorted(known - {"min_transactions"} - set(pairs))
        if missing:
            raise ValueError(f"config missing key(s): {', '.join(missing)}")
        return cls(
            amount_column=pairs["amount_column"],
            type_column=pairs["type_column"],
            numeric_columns=tuple(c.strip() for c in pairs["numeric_columns"].split(",") if c.strip()),
            customer_column=pairs["customer_column"],
            label_column=pairs["label_column"],
            min_transactions=int(pairs.get("min_transactions", 5)),
        )


@dataclass
class RawTable:
    """A loaded CSV restricted to the configured columns (string cells)."""

    columns: list[str]
    rows: list[list[str]]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("RawTable requires at least one data row")
        arity = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != arity:
                raise ValueError(f"row {i} has {len(row)} cells, expected {arity}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[str]:
        j = self.columns.index(name)
        return [row[j] for row in self.rows]


class Dataset:
    """Immutable numeric feature matrix with evaluation-only labels.

    ``labels`` is exposed through a counting property so tests can assert
    that scoring code never touches it; only the metrics/evaluation path may.
    """

    def __init__(self, features, labels, customer_ids=None, feature_names=None):
        features = np.ascontiguousarray(features, dtype=float)
        if features.ndim != 2 or features.shape[0] == 0:
            raise ValueError("features must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain non-finite values")
        labels = np.ascontiguousarray(labels, dtype=int)
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be one per feature row")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be binary (0/1)")
        if customer_ids is not None:
            customer_ids = np.ascontiguousarray(customer_ids, dtype=int)
            if customer_ids.shape != (features.shape[0],):
                raise ValueError("customer_ids must be one per feature row")
            customer_ids.flags.writeable = False
        if feature_names is None:
            feature_names = tuple(f"f{j}" for j in range(features.shape[1]))
        feature_names = tuple(str(n) for n in feature_names)
        if len(feature_names) != features.shape[1]:
            raise ValueError("feature_names must match feature count")

        features.flags.writeable = False
        labels.flags.writeable = False
        self.features = features
        self._labels = labels
        self.customer_ids = customer_ids
        self.feature_names = feature_names
        self._label_reads = 0

    @property
    def labels(self) -> np.ndarray:
        """Evaluation-only ground truth; every read is counted."""
        self._label_reads += 1
        return self._labels

    @property
    def label_read_count(self) -> int:
        return self._label_reads

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return self.n_rows


def load_csv(path, config: DatasetConfig) -> RawTable:
    """Load a UTF-8, comma-separated file keeping only the configured columns.

    Raises with the offending column name when a configured column is absent
    and with the file line number when a row's arity disagrees with the header.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    wanted = config.all_columns()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file, expected a header row")
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ValueError(f"{path}: missing column(s): {', '.join(missing)}")
        take = [header.index(c) for c in wanted]
        arity = len(header)
        rows: list[list[str]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != arity:
                raise ValueError(
                    f"{path}: line {lineno}: expected {arity} fields, got {len(row)}"
                )
            rows.append([row[j] for j in take])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return RawTable(columns=list(wanted), rows=rows)


def _parse_customers(cells: list[str]) -> np.ndarray:
    try:
        return np.array([int(float(c)) for c in cells], dtype=int)
    except ValueError:
        # Non-integer identifiers: deterministic first-appearance ordinals.
        seen: dict[str, int] = {}
        return np.array([seen.setdefault(c, len(seen)) for c in cells], dtype=int)


def _parse_numeric(cells: list[str], column: str) -> np.ndarray:
    out = np.empty(len(cells), dtype=float)
    for i, cell in enumerate(cells):
        token = cell.strip()
        if token.lower() in _MISSING_TOKENS:
            out[i] = 0.0
            continue
        try:
            value = float(token)
        except ValueError:
            raise ValueError(f"column '{column}': cannot parse {cell!r} as a number") from None
        if not np.isfinite(value):
            raise ValueError(f"column '{column}': non-finite value {cell!r}")
        out[i] = value
    return out


def frequency_rank_encode(cells: list[str]) -> np.ndarray:
    """Encode categories by descending frequency, ties broken lexicographically."""
    counts = Counter(cells)
    order = sorted(counts, key=lambda c: (-counts[c], c))
    rank = {cat: i for i, cat in enumerate(order)}
    return np.array([rank[c] for c in cells], dtype=float)


def filter_min_transactions(customer_ids: np.ndarray, min_transactions: int) -> np.ndarray:
    """Indices of rows whose customer has at least ``min_transactions`` rows."""
    counts = Counter(customer_ids.tolist())
    keep = [i for i, c in enumerate(customer_ids.tolist()) if counts[c] >= min_transactions]
    return np.array(keep, dtype=int)


def preprocess(raw: RawTable, config: DatasetConfig) -> Dataset:
    """Filter thin customers, scale amounts/numerics, and encode the type column."""
    customers = _parse_customers(raw.column(config.customer_column))
    keep = filter_min_transactions(customers, config.min_transactions)
    if keep.size == 0:
        raise ValueError(
            f"dataset empty after dropping customers with fewer than "
            f"{config.min_transactions} transactions"
        )
    rows = [raw.rows[i] for i in keep.tolist()]
    kept = RawTable(columns=raw.columns, rows=rows)

    amount = sign_log(_parse_numeric(kept.column(config.amount_column), config.amount_column))
    type_codes = frequency_rank_encode(kept.column(config.type_column))
    numerics = [
        sign_log(_parse_numeric(kept.column(name), name)) for name in config.numeric_columns
    ]

    labels = np.empty(kept.n_rows, dtype=int)
    for i, cell in enumerate(kept.column(config.label_column)):
        token = cell.strip()
        if token not in ("0", "1"):
            raise ValueError(
                f"column '{config.label_column}': expected 0/1 labels, got {cell!r}"
            )
        labels[i] = int(token)

    features = np.column_stack([amount, type_codes, *numerics])
    names = (
        f"{config.amount_column}_log",
        f"{config.type_column}_enc",
        *(f"{n}_log" for n in config.numeric_columns),
    )
    return Dataset(features, labels, customer_ids=customers[keep], feature_names=names)


def _cluster_centers(dims: int) -> np.ndarray:
    """Three cluster centers, pairwise 10.5 apart, spread over every dimension.

    Spreading the separation across all dims (instead of a single axis) means
    box anomalies stick out in a varying number of dimensions, which keeps
    their isolation patterns diverse rather than collapsing into one blob.
    """
    spacing = 10.5
    if dims == 1:
        return np.array([[0.0], [spacing], [2.0 * spacing]])
    u = np.ones(dims) / np.sqrt(dims)
    w = np.where(np.arange(dims) % 2 == 0, 1.0, -1.0)
    w = w - (w @ u) * u
    w = w / np.linalg.norm(w)
    c2 = spacing * u
    c3 = spacing * (0.5 * u + (np.sqrt(3.0) / 2.0) * w)
    return np.vstack([np.zeros(dims), c2, c3])


def generate_synthetic(n_normal: int, n_anomaly: int, dims: int, seed: int) -> Dataset:
    """Seeded toy dataset: 3 well-separated Gaussian clusters plus box anomalies.

    Normal points come from unit-covariance clusters whose centers are 10.5
    apart; anomalies are drawn uniformly from a box twice as wide as the
    normal points' extent, so random-partition detectors isolate them
    quickly.  Bit-identical output for identical arguments.
    """
    if n_normal < 2:
        raise ValueError("n_normal must be >= 2")
    if n_anomaly < 0:
        raise ValueError("n_anomaly must be >= 0")
    if dims < 1:
        raise ValueError("dims must be >= 1")
    rng = np.random.default_rng(seed)
    centers = _cluster_centers(dims)
    assignment = rng.integers(0, 3, size=n_normal)
    normal = centers[assignment] + rng.standard_normal((n_normal, dims))

    lo = normal.min(axis=0)
    hi = normal.max(axis=0)
    mid = (lo + hi) / 2.0
    half = hi - lo  # box width is twice the observed extent
    if n_anomaly > 0:
        anomalies = rng.uniform(mid - half, mid + half, size=(n_anomaly, dims))
        features = np.vstack([normal, anomalies])
    else:
        features = normal
    labels = np.concatenate([np.zeros(n_normal, dtype=int), np.ones(n_anomaly, dtype=int)])
    return Dataset(features, labels)
