"""
Ingest Service

CSV ingestion for KDD-style intrusion data: per-row validation, label
clean-up, optional one-hot encoding, standardisation and the split of rows
into the null class, named attacks and the small-category "unknown" union.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from scoretest.artifacts import read_json, write_samples_csv
from scoretest.config import BAD_ROW_FRACTION, UNKNOWN_MAX_COUNT
from scoretest.errors import DataError, InputError
from scoretest.logger import ingest_logger
from scoretest.models.base import frozen_array
from scoretest.schemas import IngestSchema

KDD_TABLE1_COUNTS = {
    "normal": 87832,
    "neptune": 51820,
    "back": 968,
    "teardrop": 918,
    "satan": 906,
    "warezclient": 893,
    "ipsweep": 651,
    "smurf": 641,
    "portsweep": 416,
    "pod": 206,
    "nmap": 158,
    "unknown": 177,
}


@dataclass(frozen=True)
class StandardizationStats:
    feature_names: List[str]
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: List[str]
    stats: Optional[StandardizationStats] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float).reshape(-1, len(self.feature_names))
        labels = np.asarray(self.labels, dtype=object).ravel()
        if X.shape[0] != labels.shape[0]:
            raise InputError(f"{X.shape[0]} feature rows but {labels.shape[0]} labels")
        if np.isnan(X).any():
            raise DataError("dataset contains NaN features")
        object.__setattr__(self, "features", frozen_array(X))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", list(self.feature_names))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def label_counts(self) -> Dict[str, int]:
        return {str(k): int(v) for k, v in pd.Series(self.labels, dtype=object).value_counts().items()}

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return replace(self, features=self.features[mask], labels=self.labels[mask])


def _load_schema(schema: Union[IngestSchema, str, Path, dict]) -> IngestSchema:
    if isinstance(schema, IngestSchema):
        return schema
    if isinstance(schema, (str, Path)):
        schema = read_json(schema)
    return IngestSchema.model_validate(schema)


def normalize_label(label: str) -> str:
    """Strip whitespace and one trailing '.' (raw KDD labels read 'normal.')."""
    label = str(label).strip()
    return label[:-1] if label.endswith(".") else label


def ingest_csv(path: Union[str, Path], schema: Union[IngestSchema, str, Path, dict]) -> Dataset:
    """Parse a comma-separated file according to a column-role schema.

    Rows that are too short, have unparseable continuous fields or an empty
    label are reported with their data-row index; more than
    BAD_ROW_FRACTION of them aborts with a DataError. An unreadable file raises
    the underlying OSError.
    """
    schema = _load_schema(schema)
    labels = [i for i, role in schema.columns.items() if role == "label"]
    if len(labels) != 1:
        raise InputError(f"schema must mark exactly one label column, found {len(labels)}")
    label_col = labels[0]
    continuous = sorted(i for i, role in schema.columns.items() if role == "continuous")
    categorical = sorted(i for i, role in schema.columns.items() if role == "categorical")
    width = max(schema.columns) + 1

    lines = pd.Series(Path(path).read_text(encoding="utf-8").splitlines(), dtype=object)
    lines = lines[lines.str.strip() != ""].reset_index(drop=True)

    header = None
    if schema.header:
        if lines.empty:
            raise DataError(f"{path}: header expected but file is empty")
        header = [h.strip() for h in lines.iloc[0].split(",")]
        lines = lines.iloc[1:].reset_index(drop=True)
    if lines.empty:
        raise DataError(f"{path}: no data rows")

    fields = lines.str.split(",", expand=True).reindex(columns=range(width))
    names = {i: (header[i] if header and i < len(header) else f"f{i}") for i in range(width)}

    bad_rows: List[dict] = []
    short = lines.str.count(",") + 1 < width
    for idx in np.flatnonzero(short.to_numpy()):
        bad_rows.append({"row": int(idx), "reason": f"expected at least {width} fields"})

    numeric = fields[continuous].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    unparsed = numeric.isna() | ~np.isfinite(numeric.fillna(0.0))
    label_values = fields[label_col].fillna("").map(normalize_label)
    for idx in np.flatnonzero((unparsed.any(axis=1) | (label_values == "")).to_numpy() & ~short.to_numpy()):
        cols = [names[c] for c in continuous if unparsed.at[idx, c]]
        reason = f"unparseable continuous field(s) {cols}" if cols else "empty label"
        bad_rows.append({"row": int(idx), "reason": reason})
    bad_rows.sort(key=lambda r: r["row"])

    total = len(lines)
    if bad_rows:
        for report in bad_rows[:20]:
            ingest_logger.warning(f"[INGEST] {path} row {report['row']}: {report['reason']}")
        if len(bad_rows) / total > BAD_ROW_FRACTION:
            raise DataError(
                f"{path}: {len(bad_rows)} of {total} rows are malformed (limit {BAD_ROW_FRACTION:.0%})",
                bad_rows=bad_rows,
            )
    keep = np.ones(total, dtype=bool)
    keep[[r["row"] for r in bad_rows]] = False

    frame = numeric[keep].rename(columns=names)
    if categorical:
        if schema.one_hot:
            symbols = fields.loc[keep, categorical].apply(lambda col: col.str.strip()).rename(columns=names)
            frame = pd.concat([frame, pd.get_dummies(symbols, prefix_sep="=", dtype=float)], axis=1)
        else:
            ingest_logger.info(f"[INGEST] dropping categorical column(s) {[names[c] for c in categorical]}")

    ds = Dataset(
        features=frame.to_numpy(dtype=float),
        labels=label_values[keep].to_numpy(dtype=object),
        feature_names=[str(c) for c in frame.columns],
    )
    ingest_logger.info(f"[INGEST] {path}: n={ds.n} d={ds.d} labels={ds.label_counts()}")
    return ds


# =====================
# STANDARDISATION
# =====================
def standardize(ds: Dataset, stats: Optional[StandardizationStats] = None) -> Dataset:
    """Training mode (no stats) fits mean/sd and drops zero-variance features; evaluation mode applies given stats."""
    if stats is None:
        mean = ds.features.mean(axis=0)
        std = ds.features.std(axis=0)
        retained = std > 0
        if not retained.all():
            dropped = [name for name, ok in zip(ds.feature_names, retained) if not ok]
            ingest_logger.info(f"[STANDARDIZE] dropping zero-variance feature(s) {dropped}")
        names = [name for name, ok in zip(ds.feature_names, retained) if ok]
        stats = StandardizationStats(names, frozen_array(mean[retained]), frozen_array(std[retained]))
    elif np.any(np.asarray(stats.std) <= 0):
        raise InputError("standardisation stats contain a non-positive standard deviation")

    missing = [name for name in stats.feature_names if name not in ds.feature_names]
    if missing:
        raise DataError(f"dataset lacks feature(s) {missing} named by the standardisation stats")
    columns = [ds.feature_names.index(name) for name in stats.feature_names]
    X = (ds.features[:, columns] - stats.mean) / stats.std
    return Dataset(features=X, labels=ds.labels, feature_names=list(stats.feature_names), stats=stats)


def unstandardize(ds: Dataset) -> Dataset:
    if ds.stats is None:
        raise InputError("dataset carries no standardisation stats")
    X = ds.features * ds.stats.std + ds.stats.mean
    return Dataset(features=X, labels=ds.labels, feature_names=ds.feature_names)


# =====================
# PARTITIONING
# =====================
@dataclass(frozen=True)
class AttackSpec:
    """Named attacks always get their own split; other categories with at most unknown_max rows join 'unknown'."""

    named: List[str] = field(default_factory=list)
    unknown_max: int = UNKNOWN_MAX_COUNT


@dataclass(frozen=True)
class Partition:
    null: Dataset
    attacks: Dict[str, Dataset]
    unknown: Dataset

    def sizes(self) -> Dict[str, int]:
        sizes = {"null": self.null.n, "unknown": self.unknown.n}
        sizes.update({name: split.n for name, split in self.attacks.items()})
        return sizes


def partition_by_label(ds: Dataset, null_label: str, spec: Optional[AttackSpec] = None) -> Partition:
    spec = spec or AttackSpec()
    counts = ds.label_counts()
    if null_label not in counts:
        raise DataError(f"null label '{null_label}' not present (labels: {sorted(counts)})")

    attacks: Dict[str, Dataset] = {}
    unknown_labels = []
    for label, count in sorted(counts.items()):
        if label == null_label:
            continue
        if label in spec.named or count > spec.unknown_max:
            attacks[label] = ds.subset(ds.labels == label)
        else:
            unknown_labels.append(label)

    partition = Partition(
        null=ds.subset(ds.labels == null_label),
        attacks=attacks,
        unknown=ds.subset(np.isin(ds.labels, unknown_labels)),
    )
    ingest_logger.info(f"[PARTITION] {partition.sizes()} (unknown = {unknown_labels})")
    return partition


def prepare_splits(ds: Dataset, null_label: str, spec: Optional[AttackSpec] = None) -> Partition:
    """Partition, then standardise every split with stats fitted on the null split alone."""
    raw = partition_by_label(ds, null_label, spec)
    null = standardize(raw.null)
    return Partition(
        null=null,
        attacks={name: standardize(split, null.stats) for name, split in raw.attacks.items()},
        unknown=standardize(raw.unknown, null.stats),
    )


def write_splits(partition: Partition, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """One sample-dump CSV per split."""
    out_dir = Path(out_dir)
    paths = {"null": write_samples_csv(out_dir / "null.csv", partition.null.features)}
    for name, split in partition.attacks.items():
        paths[name] = write_samples_csv(out_dir / f"{name}.csv", split.features)
    if partition.unknown.n:
        paths["unknown"] = write_samples_csv(out_dir / "unknown.csv", partition.unknown.features)
    return paths


def compare_label_counts(ds: Dataset, spec: Optional[AttackSpec] = None, null_label: str = "normal") -> pd.DataFrame:
    """Observed split sizes next to the published KDD statistics."""
    observed = partition_by_label(ds, null_label, spec).sizes()
    observed[null_label] = observed.pop("null")
    rows = [
        {"label": label, "expected": expected, "observed": observed.get(label, 0)}
        for label, expected in KDD_TABLE1_COUNTS.items()
    ]
    frame = pd.DataFrame(rows, columns=["label", "expected", "observed"])
    frame["match"] = frame["expected"] == frame["observed"]
    return frame
