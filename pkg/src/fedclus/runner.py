"""Run the configured algorithms on one dataset and write their logs."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dataio, metrics
from .config import ExperimentSpec
from .dataio import ClientPartition, Dataset
from .federation import ALGORITHMS, ExperimentResult, RoundLog, WeightRecord, build_topology, run_experiment
from .model import predict_prob

logger = logging.getLogger(__name__)

METRICS = ("accuracy", "precision", "recall", "f1", "auc", "ks")


@dataclass
class PreparedData:
    train: Dataset
    test: Dataset
    partitions: list[ClientPartition]


def prepare(spec: ExperimentSpec, seed: int) -> PreparedData:
    """Load, split, standardize (train stats applied to test) and partition."""
    raw = dataio.load_csv(spec.dataset_path, spec.schema, lenient=spec.lenient)
    raw_train, raw_test = dataio.split_train_test(raw, spec.test_count, seed)
    # partition raw rows so reports carry the original attribute values
    if spec.partition_scheme == "attribute":
        parts = dataio.partition_by_attribute(raw_train, spec.partition_attribute, spec.clients, seed)
    else:
        parts = dataio.partition_iid(raw_train, spec.clients, seed)
    train, stats = dataio.standardize(raw_train)
    parts = [replace(p, data=stats.apply(p.data)) for p in parts]
    return PreparedData(train, stats.apply(raw_test), parts)


def _fmt(value: float) -> str:
    return "nan" if math.isnan(value) else repr(float(value))


def _json_number(value: float):
    return None if math.isnan(value) else float(value)


def write_rounds(logs: Sequence[RoundLog], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RoundLog.FIELDS)
        for log in logs:
            writer.writerow([log.round, log.algorithm] + [_fmt(getattr(log, m)) for m in METRICS])


def summarize(logs: Sequence[RoundLog]) -> dict:
    """Min / 1st quartile / median / mean / max of each metric over rounds.

    Rounds where a metric is undefined are left out and counted.
    """
    out = {}
    for name in METRICS:
        values = np.array([getattr(log, name) for log in logs], dtype=float)
        defined = values[~np.isnan(values)]
        if defined.size:
            stats = {
                "min": float(defined.min()),
                "q1": float(np.quantile(defined, 0.25)),
                "median": float(np.median(defined)),
                "mean": float(defined.mean()),
                "max": float(defined.max()),
            }
        else:
            stats = dict.fromkeys(("min", "q1", "median", "mean", "max"))
        stats["undefined_rounds"] = int(values.size - defined.size)
        out[name] = stats
    return out


def write_summary(algorithm: str, result: ExperimentResult, path: Path) -> None:
    last = result.logs[-1]
    doc = {
        "algorithm": algorithm,
        "rounds": len(result.logs),
        "metrics": summarize(result.logs),
        "final": {m: _json_number(getattr(last, m)) for m in METRICS},
        "final_params": [float(v) for v in result.final_params],
    }
    path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")


def write_weight_log(records: Sequence[WeightRecord], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "source_id", "weight", "deviation", "fallback"])
        for r in records:
            writer.writerow([r.round, r.source_id, repr(r.weight), repr(r.deviation), int(r.fallback)])


def write_comparison(results: dict[str, ExperimentResult], path: Path) -> None:
    algos = list(results)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "metric"] + algos)
        rounds = len(results[algos[0]].logs)
        for i in range(rounds):
            writer.writerow(
                [results[algos[0]].logs[i].round, "accuracy"]
                + [_fmt(results[a].logs[i].accuracy) for a in algos]
            )
        writer.writerow([rounds, "final_ks"] + [_fmt(results[a].logs[-1].ks) for a in algos])


def final_curve(result: ExperimentResult, test: Dataset) -> metrics.RocCurve:
    return metrics.roc_curve(predict_prob(result.final_params, test.features), test.labels)


def emit_plot_data(results: dict[str, ExperimentResult], test: Dataset, out_dir: Path) -> list[Path]:
    """Accuracy-by-round and final KS curve tables for external plotting."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    acc_path = out_dir / "accuracy_by_round.csv"
    with acc_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "round", "accuracy"])
        for algo, result in results.items():
            for log in result.logs:
                writer.writerow([algo, log.round, _fmt(log.accuracy)])
    written.append(acc_path)
    for algo, result in results.items():
        path = out_dir / f"{algo}_ks_curve.csv"
        with path.open("w", newline="") as fh:
            metrics.write_ks_curve(final_curve(result, test), fh)
        written.append(path)
    return written


def run_seed(
    spec: ExperimentSpec,
    seed: int,
    out_dir: Path,
    workers: int | None = None,
    weight_log: bool = False,
    plot_data: bool = False,
) -> dict[str, ExperimentResult]:
    data = prepare(spec, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for algo in spec.algorithms:
        overrides = {} if workers is None else {"workers": workers}
        cfg = spec.fed_config(algo, seed, **overrides)
        hierarchical = ALGORITHMS[algo][2]
        topo = build_topology(data.partitions, spec.subservers if hierarchical else None, seed)
        records: list[WeightRecord] | None = [] if weight_log else None
        logger.info("running %s (seed %d, %d rounds)", algo, seed, cfg.rounds)
        result = run_experiment(cfg, topo, data.test, algo, weight_log=records)
        results[algo] = result

        write_rounds(result.logs, out_dir / f"{algo}_rounds.csv")
        write_summary(algo, result, out_dir / f"{algo}_summary.json")
        with (out_dir / f"{algo}_roc_final.csv").open("w", newline="") as fh:
            metrics.write_roc(final_curve(result, data.test), fh)
        if records is not None:
            write_weight_log(records, out_dir / f"{algo}_weights.csv")
    write_comparison(results, out_dir / "comparison.csv")
    if plot_data:
        emit_plot_data(results, data.test, out_dir / "plot_data")
    return results


def run(
    spec: ExperimentSpec,
    out_dir: Path | None = None,
    seeds: Sequence[int] | None = None,
    workers: int | None = None,
    weight_log: bool = False,
    plot_data: bool = False,
) -> int:
    """Execute an experiment; with ``seeds`` each seed gets its own ``seed_<n>`` subdirectory."""
    out_dir = Path(out_dir) if out_dir is not None else spec.out_dir
    if seeds:
        for seed in seeds:
            run_seed(spec, seed, out_dir / f"seed_{seed}", workers, weight_log, plot_data)
    else:
        run_seed(spec, spec.seed, out_dir, workers, weight_log, plot_data)
    return 0
