"""Tabular ingestion, feature standardization, splitting and client partitioning."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .errors import (
    AlreadyStandardized,
    InvalidSplitSize,
    ParseError,
    SchemaMismatch,
    TooManyClients,
    UnknownAttribute,
)

logger = logging.getLogger(__name__)

VARIANCE_CONVENTION = "sample (n-1)"


@dataclass(frozen=True)
class Schema:
    feature_names: tuple[str, ...]
    target_name: str
    delimiter: str = ";"
    id_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if not self.feature_names:
            raise SchemaMismatch("schema needs at least one feature")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaMismatch("duplicate feature names in schema")
        if self.target_name in self.feature_names:
            raise SchemaMismatch(f"target {self.target_name!r} is also listed as a feature")
        if self.id_column is not None and (
            self.id_column in self.feature_names or self.id_column == self.target_name
        ):
            raise SchemaMismatch(f"id column {self.id_column!r} clashes with a data column")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    standardized: bool = False

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if features.shape[0] < 1:
            raise ValueError("dataset must hold at least one sample")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be a vector with one entry per row")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if not np.isfinite(features).all():
            raise ValueError("features contain non-finite values")
        if len(self.feature_names) != features.shape[1]:
            raise ValueError("feature_names length does not match feature columns")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(np.int64))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[indices], labels=self.labels[indices])

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.feature_names.index(name)
        except ValueError:
            raise UnknownAttribute(f"no feature named {name!r}") from None
        return self.features[:, j]


@dataclass(frozen=True)
class StandardizationStats:
    """Per-feature location/scale learned on one dataset.

    ``constant`` flags columns whose sample variance was zero; those are
    centered only and carry a stdev of 1.
    """

    means: np.ndarray
    stdevs: np.ndarray
    constant: np.ndarray
    convention: str = VARIANCE_CONVENTION

    def apply(self, ds: Dataset) -> Dataset:
        if ds.standardized:
            raise AlreadyStandardized("dataset is already standardized")
        if ds.p != self.means.shape[0]:
            raise ValueError(f"stats cover {self.means.shape[0]} features, dataset has {ds.p}")
        scaled = (ds.features - self.means) / self.stdevs
        return replace(ds, features=scaled, standardized=True)


@dataclass(frozen=True)
class ClientPartition:
    client_id: int
    data: Dataset
    attribute_value: float | None = field(default=None)

    @property
    def sample_count(self) -> int:
        return self.data.n


def load_csv(path: str | Path, schema: Schema, lenient: bool = False) -> Dataset:
    """Read a delimited file with one header row into a raw ``Dataset``.

    In strict mode the first unparseable or missing cell raises
    ``ParseError``; with ``lenient=True`` such rows are dropped and the
    number dropped is logged.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)

    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch(f"{path} is empty") from None
        wanted = list(schema.feature_names) + [schema.target_name]
        missing = [name for name in wanted if name not in header]
        if missing:
            raise SchemaMismatch(f"header of {path} lacks columns {missing}")
        if schema.id_column is not None and schema.id_column not in header:
            raise SchemaMismatch(f"header of {path} lacks id column {schema.id_column!r}")
        positions = [header.index(name) for name in wanted]

        rows: list[list[float]] = []
        dropped = 0
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            try:
                row = []
                for name, pos in zip(wanted, positions):
                    cell = record[pos].strip() if pos < len(record) else ""
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ParseError(lineno, name, cell) from None
                    if not math.isfinite(value):
                        raise ParseError(lineno, name, cell)
                    if name == schema.target_name and value not in (0.0, 1.0):
                        raise ParseError(lineno, name, cell)
                    row.append(value)
            except ParseError:
                if not lenient:
                    raise
                dropped += 1
                continue
            rows.append(row)

    if dropped:
        logger.warning("dropped %d malformed rows from %s", dropped, path)
    if not rows:
        raise SchemaMismatch(f"{path} holds no usable data rows")
    table = np.asarray(rows, dtype=float)
    return Dataset(
        features=table[:, :-1],
        labels=table[:, -1].astype(np.int64),
        feature_names=schema.feature_names,
    )


def fit_standardization(ds: Dataset) -> StandardizationStats:
    means = ds.features.mean(axis=0)
    if ds.n > 1:
        stdevs = ds.features.std(axis=0, ddof=1)
    else:
        stdevs = np.zeros(ds.p)
    constant = ~(stdevs > 0)
    stdevs = np.where(constant, 1.0, stdevs)
    return StandardizationStats(means=means, stdevs=stdevs, constant=constant)


def standardize(ds: Dataset) -> tuple[Dataset, StandardizationStats]:
    """Z-score every column using the unbiased (n-1) variance.

    Returns the scaled dataset and the stats, which should be reused to
    scale held-out data.
    """
    if ds.standardized:
        raise AlreadyStandardized("dataset is already standardized")
    stats = fit_standardization(ds)
    return stats.apply(ds), stats


def split_train_test(ds: Dataset, test_count: int, seed: int) -> tuple[Dataset, Dataset]:
    if not 0 < test_count < ds.n:
        raise InvalidSplitSize(f"test_count must lie in (0, {ds.n}), got {test_count}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    test_idx = np.sort(perm[:test_count])
    train_idx = np.sort(perm[test_count:])
    return ds.take(train_idx), ds.take(test_idx)


def _apportion(counts: Sequence[int], k: int) -> list[int]:
    """Largest-remainder allocation of ``k`` clients, at least one per group."""
    total = sum(counts)
    quotas = [k * c / total for c in counts]
    alloc = [max(1, math.floor(q)) for q in quotas]
    while sum(alloc) < k:
        best = max(range(len(alloc)), key=lambda i: (quotas[i] - alloc[i], -i))
        alloc[best] += 1
    while sum(alloc) > k:
        shrinkable = [i for i in range(len(alloc)) if alloc[i] > 1]
        worst = min(shrinkable, key=lambda i: (quotas[i] - alloc[i], i))
        alloc[worst] -= 1
    return alloc


def partition_by_attribute(ds: Dataset, attribute: str, k: int, seed: int) -> list[ClientPartition]:
    """Deal samples into ``k`` clients that each hold a single attribute value.

    Clients are shared out across attribute values in proportion to how
    often each value occurs; within a value the samples are shuffled and
    split into near-equal chunks. Client ids run over values in ascending
    order.
    """
    column = ds.column(attribute)
    values, counts = np.unique(column, return_counts=True)
    if k < 2:
        raise InvalidSplitSize(f"need at least 2 clients, got {k}")
    if k < len(values):
        raise InvalidSplitSize(
            f"{k} clients cannot keep {len(values)} values of {attribute!r} apart"
        )
    alloc = _apportion(counts.tolist(), k)
    for value, count, n_clients in zip(values, counts, alloc):
        if n_clients > count:
            raise TooManyClients(
                f"{n_clients} clients for {attribute}={value:g} but only {count} samples"
            )

    rng = np.random.default_rng(seed)
    partitions = []
    client_id = 0
    for value, n_clients in zip(values, alloc):
        idx = np.flatnonzero(column == value)
        rng.shuffle(idx)
        for chunk in np.array_split(idx, n_clients):
            partitions.append(ClientPartition(client_id, ds.take(chunk), float(value)))
            client_id += 1
    return partitions


def partition_iid(ds: Dataset, k: int, seed: int) -> list[ClientPartition]:
    if k < 1:
        raise InvalidSplitSize(f"need at least 1 client, got {k}")
    if k > ds.n:
        raise TooManyClients(f"{k} clients for {ds.n} samples")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return [
        ClientPartition(i, ds.take(chunk)) for i, chunk in enumerate(np.array_split(perm, k))
    ]


def write_partition_report(partitions: Sequence[ClientPartition], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["client_id", "size", "attribute_value"])
    for part in partitions:
        value = "" if part.attribute_value is None else f"{part.attribute_value:g}"
        writer.writerow([part.client_id, part.sample_count, value])
