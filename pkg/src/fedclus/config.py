"""Experiment configuration files (YAML) and their validation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import yaml

from .clustering import ClusterConfig
from .dataio import Schema
from .errors import ConfigError, FedClusError
from .federation import ALGORITHMS, FedConfig

_DATASET_KEYS = {"path", "features", "target", "id_column", "delimiter", "test_count", "lenient"}
_PARTITION_KEYS = {"scheme", "attribute", "clients"}
_FEDERATION_KEYS = {
    "lr",
    "local_epochs",
    "batch_size",
    "rounds",
    "subservers",
    "epsilon",
    "weighting",
    "participation",
    "workers",
}
_CLUSTERING_KEYS = {
    "theta",
    "min_samples_to_cluster",
    "max_clusters",
    "samples_per_cluster",
    "acceptance_factor",
}
_TOP_KEYS = {"seed", "out_dir", "algorithms", "dataset", "partition", "federation", "clustering"}


@dataclass(frozen=True)
class ExperimentSpec:
    dataset_path: Path
    schema: Schema
    test_count: int
    lenient: bool
    partition_scheme: str
    partition_attribute: str | None
    clients: int
    algorithms: tuple[str, ...]
    fed: FedConfig
    subservers: int | None
    out_dir: Path
    seed: int

    def fed_config(self, algorithm: str, seed: int | None = None, **overrides) -> FedConfig:
        use_clustering, aggregation, _ = ALGORITHMS[algorithm]
        return replace(
            self.fed,
            use_clustering=use_clustering,
            aggregation=aggregation,
            global_seed=self.seed if seed is None else seed,
            **overrides,
        )


def _section(raw: dict, name: str, allowed: set[str], required: bool = True) -> dict:
    value = raw.get(name)
    if value is None:
        if required:
            raise ConfigError(name, "missing section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a mapping")
    for key in value:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return value


def _typed(section: dict, prefix: str, key: str, kind, default: Any = ..., check=None, why=""):
    path = f"{prefix}.{key}" if prefix else key
    if section.get(key) is None:
        if default is ...:
            raise ConfigError(path, "required")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is float and isinstance(value, str):
        # YAML 1.1 reads exponents without a dot (1e-12) as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(path, f"expected float, got {value!r}") from None
    if kind is int and isinstance(value, bool):
        raise ConfigError(path, "expected an integer")
    if not isinstance(value, kind):
        raise ConfigError(path, f"expected {kind.__name__}, got {type(value).__name__}")
    if check is not None and not check(value):
        raise ConfigError(path, why or f"invalid value {value!r}")
    return value


def spec_from_dict(raw: Any, base_dir: Path = Path(".")) -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key")

    seed = _typed(raw, "", "seed", int, 0, lambda v: v >= 0, "must be >= 0")
    out_dir = Path(_typed(raw, "", "out_dir", str, "out"))
    algorithms = raw.get("algorithms")
    if not isinstance(algorithms, list) or not algorithms:
        raise ConfigError("algorithms", "need a non-empty list")
    for i, algo in enumerate(algorithms):
        if algo not in ALGORITHMS:
            raise ConfigError(f"algorithms[{i}]", f"unknown algorithm {algo!r}; pick from {sorted(ALGORITHMS)}")
    if len(set(algorithms)) != len(algorithms):
        raise ConfigError("algorithms", "duplicate entries")

    ds = _section(raw, "dataset", _DATASET_KEYS)
    path = Path(_typed(ds, "dataset", "path", str))
    features = ds.get("features")
    if not isinstance(features, list) or not all(isinstance(f, str) for f in features):
        raise ConfigError("dataset.features", "need a list of column names")
    try:
        schema = Schema(
            tuple(features),
            _typed(ds, "dataset", "target", str),
            delimiter=_typed(ds, "dataset", "delimiter", str, ";", lambda v: len(v) == 1, "must be one character"),
            id_column=_typed(ds, "dataset", "id_column", str, None),
        )
    except FedClusError as exc:
        raise ConfigError("dataset.features", str(exc)) from None
    test_count = _typed(ds, "dataset", "test_count", int, check=lambda v: v > 0, why="must be > 0")
    lenient = _typed(ds, "dataset", "lenient", bool, False)

    part = _section(raw, "partition", _PARTITION_KEYS)
    scheme = _typed(part, "partition", "scheme", str, "attribute", lambda v: v in ("attribute", "iid"),
                    "must be 'attribute' or 'iid'")
    attribute = _typed(part, "partition", "attribute", str, None)
    if scheme == "attribute":
        if attribute is None:
            raise ConfigError("partition.attribute", "required for the attribute scheme")
        if attribute not in schema.feature_names:
            raise ConfigError("partition.attribute", f"{attribute!r} is not a listed feature")
    clients = _typed(part, "partition", "clients", int, check=lambda v: v >= 1, why="must be >= 1")
    if scheme == "attribute" and clients < 2:
        raise ConfigError("partition.clients", "attribute partitioning needs at least 2 clients")

    fed = _section(raw, "federation", _FEDERATION_KEYS)
    subservers = _typed(fed, "federation", "subservers", int, None, lambda v: 1 <= v <= clients,
                        f"must lie in [1, {clients}]")
    if subservers is None:
        for algo in algorithms:
            if ALGORITHMS[algo][2]:
                raise ConfigError("federation.subservers", f"{algo} needs a subserver count")

    clus = _section(raw, "clustering", _CLUSTERING_KEYS, required=False)
    try:
        cluster_config = ClusterConfig(
            theta=_typed(clus, "clustering", "theta", float, 0.5, lambda v: 0 < v < 1, "must lie in (0, 1)"),
            min_samples_to_cluster=_typed(clus, "clustering", "min_samples_to_cluster", int, 300,
                                          lambda v: v >= 2, "must be >= 2"),
            max_clusters=_typed(clus, "clustering", "max_clusters", int, None, lambda v: v >= 1, "must be >= 1"),
            samples_per_cluster=_typed(clus, "clustering", "samples_per_cluster", int, 50,
                                       lambda v: v >= 1, "must be >= 1"),
            acceptance_factor=_typed(clus, "clustering", "acceptance_factor", float, 1.2,
                                     lambda v: v > 0, "must be > 0"),
        )
    except ValueError as exc:
        raise ConfigError("clustering", str(exc)) from None

    fed_config = FedConfig(
        lr=_typed(fed, "federation", "lr", float, check=lambda v: v >= 0, why="must be >= 0"),
        local_epochs=_typed(fed, "federation", "local_epochs", int, check=lambda v: v >= 1, why="must be >= 1"),
        batch_size=_typed(fed, "federation", "batch_size", int, 50, lambda v: v >= 1, "must be >= 1"),
        rounds=_typed(fed, "federation", "rounds", int, check=lambda v: v >= 1, why="must be >= 1"),
        cluster_config=cluster_config,
        epsilon=_typed(fed, "federation", "epsilon", float, 1e-12, lambda v: v > 0, "must be > 0"),
        weighting=_typed(fed, "federation", "weighting", str, "as-written",
                         lambda v: v in ("as-written", "inverse-deviation"),
                         "must be 'as-written' or 'inverse-deviation'"),
        participation=_typed(fed, "federation", "participation", float, 1.0, lambda v: 0 < v <= 1,
                             "must lie in (0, 1]"),
        workers=_typed(fed, "federation", "workers", int, 1, lambda v: v >= 1, "must be >= 1"),
        global_seed=seed,
    )

    if not path.is_absolute():
        path = (base_dir / path).resolve()
    if not out_dir.is_absolute():
        out_dir = (base_dir / out_dir).resolve()
    return ExperimentSpec(
        dataset_path=path,
        schema=schema,
        test_count=test_count,
        lenient=lenient,
        partition_scheme=scheme,
        partition_attribute=attribute,
        clients=clients,
        algorithms=tuple(algorithms),
        fed=fed_config,
        subservers=subservers,
        out_dir=out_dir,
        seed=seed,
    )


def parse_config(path: str | Path) -> ExperimentSpec:
    """Load and validate a YAML experiment file.

    Relative dataset and output paths resolve against the file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"not valid YAML: {exc}") from None
    return spec_from_dict(raw, path.parent)
