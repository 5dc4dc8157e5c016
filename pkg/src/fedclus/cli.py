"""Command-line entry point: ``fedclus run|validate|partition-report|make-surrogate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import clustering, dataio, surrogate
from .config import parse_config
from .errors import FedClusError
from .federation import plan_clusters
from .runner import prepare, run

logger = logging.getLogger("fedclus")


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be non-negative integers")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedclus", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every configured algorithm and write logs")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None, help="output directory (overrides out_dir)")
    p_run.add_argument("--seeds", type=_seed_list, default=None, help="e.g. 1,2,3: one subdirectory per seed")
    p_run.add_argument("--workers", type=int, default=None, help="threads for client updates")
    p_run.add_argument("--weight-log", action="store_true", help="also write <algo>_weights.csv")
    p_run.add_argument("--plot-data", action="store_true", help="also write plot_data/ tables")

    p_val = sub.add_parser("validate", help="check a config file and exit")
    p_val.add_argument("config", type=Path)

    p_rep = sub.add_parser("partition-report", help="dump client partition sizes as CSV")
    p_rep.add_argument("config", type=Path)
    p_rep.add_argument("--out", type=Path, default=None, help="write here instead of stdout")
    p_rep.add_argument("--clusters", type=Path, default=None, help="also dump per-client cluster sizes")
    p_rep.add_argument("--seed", type=int, default=None)

    p_syn = sub.add_parser("make-surrogate", help="write the synthetic cardio-like CSV")
    p_syn.add_argument("out", type=Path)
    p_syn.add_argument("--n", type=int, default=10_000)
    p_syn.add_argument("--seed", type=int, default=surrogate.DEFAULT_SEED)
    return parser


def _partition_report(args) -> int:
    spec = parse_config(args.config)
    seed = spec.seed if args.seed is None else args.seed
    data = prepare(spec, seed)
    if args.out is None:
        dataio.write_partition_report(data.partitions, sys.stdout)
    else:
        with args.out.open("w", newline="") as fh:
            dataio.write_partition_report(data.partitions, fh)
    if args.clusters is not None:
        cfg = spec.fed.cluster_config
        rows = []
        for part in data.partitions:
            plan = plan_clusters(part, cfg)
            if plan is not None:
                rows.append((part.client_id, plan))
        with args.clusters.open("w", newline="") as fh:
            clustering.write_cluster_report(rows, fh)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        if args.command == "run":
            spec = parse_config(args.config)
            return run(spec, args.out, args.seeds, args.workers, args.weight_log, args.plot_data)
        if args.command == "validate":
            spec = parse_config(args.config)
            print(
                f"ok: {len(spec.algorithms)} algorithm(s) {', '.join(spec.algorithms)}; "
                f"{spec.clients} clients; {spec.fed.rounds} rounds"
            )
            return 0
        if args.command == "partition-report":
            return _partition_report(args)
        if args.command == "make-surrogate":
            surrogate.write_csv(args.out, args.n, args.seed)
            return 0
    except (FedClusError, OSError, ValueError) as exc:
        print(f"fedclus: error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
