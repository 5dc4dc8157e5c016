"""Round orchestration for flat (two-tier) and hierarchical (three-tier) federations.

Every client takes part in every round unless ``participation`` is below
1. Local training seeds come from :func:`derive_seed` over
``(global_seed, client_id, round, cluster_id)``, so results do not depend on
the order or concurrency of client updates.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import metrics
from .aggregation import (
    AS_WRITTEN,
    DEFAULT_EPSILON,
    WEIGHTING_MODES,
    AggregationWeights,
    LocalUpdate,
    deviation_weighted_average_with_weights,
    sample_weighted_mean,
)
from .clustering import ClusterConfig, ClusterSet, accept_clustering, maxmin_cluster
from .dataio import ClientPartition, Dataset
from .errors import InvalidHyperparameter, InvalidTopology, SingleClassInput
from .model import predict_prob, sgd_train

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
PARTICIPATION_STREAM = MASK64  # client_id slot reserved for participation draws

FEDAVG = "fedavg"
DEVIATION = "deviation"

# algorithm name -> (cluster inside clients, aggregation rule, hierarchical)
ALGORITHMS = {
    "fedavg": (False, FEDAVG, False),
    "fedclusavg": (True, DEVIATION, False),
    "fedavg+": (False, FEDAVG, True),
    "fedclusavg+": (True, DEVIATION, True),
}


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed with the splitmix64 finalizer.

    ``h = 0; for each part: h = splitmix64(h XOR (part mod 2**64))``.
    """
    h = 0
    for part in parts:
        h = _splitmix64(h ^ (int(part) & MASK64))
    return h


@dataclass(frozen=True)
class FedConfig:
    lr: float = 0.01
    local_epochs: int = 10
    batch_size: int = 50
    rounds: int = 400
    cluster_config: ClusterConfig = field(default_factory=ClusterConfig)
    use_clustering: bool = True
    aggregation: str = DEVIATION
    weighting: str = AS_WRITTEN
    epsilon: float = DEFAULT_EPSILON
    global_seed: int = 0
    participation: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if not self.lr >= 0:
            raise InvalidHyperparameter(f"lr must be >= 0, got {self.lr}")
        if self.local_epochs < 1:
            raise InvalidHyperparameter("local_epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidHyperparameter("batch_size must be >= 1")
        if self.rounds < 1:
            raise InvalidHyperparameter("rounds must be >= 1")
        if self.aggregation not in (FEDAVG, DEVIATION):
            raise InvalidHyperparameter(f"unknown aggregation {self.aggregation!r}")
        if self.weighting not in WEIGHTING_MODES:
            raise InvalidHyperparameter(f"unknown weighting mode {self.weighting!r}")
        if not 0 < self.participation <= 1:
            raise InvalidHyperparameter("participation must lie in (0, 1]")
        if self.workers < 1:
            raise InvalidHyperparameter("workers must be >= 1")

    @classmethod
    def for_algorithm(cls, algorithm: str, **kwargs) -> "FedConfig":
        use_clustering, aggregation, _ = ALGORITHMS[algorithm]
        return cls(use_clustering=use_clustering, aggregation=aggregation, **kwargs)


@dataclass(frozen=True)
class Topology:
    clients: tuple[ClientPartition, ...]
    # one tuple of client ids per subserver; None for a flat federation
    subservers: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(sorted(self.clients, key=lambda c: c.client_id)))
        ids = [c.client_id for c in self.clients]
        if not ids:
            raise InvalidTopology("topology has no clients")
        if len(set(ids)) != len(ids):
            raise InvalidTopology("client ids must be unique")
        if self.subservers is not None:
            if not self.subservers:
                raise InvalidTopology("hierarchical topology needs at least one subserver")
            mapped = [cid for group in self.subservers for cid in group]
            if any(not group for group in self.subservers):
                raise InvalidTopology("every subserver needs at least one client")
            if sorted(mapped) != sorted(ids):
                raise InvalidTopology("every client must belong to exactly one subserver")

    @property
    def hierarchical(self) -> bool:
        return self.subservers is not None

    @property
    def subserver_of(self) -> dict[int, int]:
        if self.subservers is None:
            return {}
        return {cid: q for q, group in enumerate(self.subservers) for cid in group}


@dataclass(frozen=True)
class RoundState:
    round_index: int
    global_params: np.ndarray
    rng_seed: int


@dataclass(frozen=True)
class RoundLog:
    round: int
    algorithm: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    ks: float

    FIELDS = ("round", "algorithm", "accuracy", "precision", "recall", "f1", "auc", "ks")


@dataclass
class ExperimentResult:
    logs: list[RoundLog]
    final_params: np.ndarray


@dataclass(frozen=True)
class WeightRecord:
    round: int
    source_id: int
    weight: float
    deviation: float
    fallback: bool


# trainer(w_start, data, cfg, seed) -> params
Trainer = Callable[[np.ndarray, Dataset, FedConfig, int], np.ndarray]


def sgd_trainer(w: np.ndarray, data: Dataset, cfg: FedConfig, seed: int) -> np.ndarray:
    return sgd_train(w, data.features, data.labels, cfg.batch_size, cfg.local_epochs, cfg.lr, seed)


def build_topology(
    partitions: Sequence[ClientPartition], n_subservers: int | None, seed: int
) -> Topology:
    """Flat topology when ``n_subservers`` is None, else a seeded round-robin deal."""
    if n_subservers is None:
        return Topology(tuple(partitions))
    if not 1 <= n_subservers <= len(partitions):
        raise InvalidTopology(f"cannot spread {len(partitions)} clients over {n_subservers} subservers")
    ids = sorted(p.client_id for p in partitions)
    shuffled = np.random.default_rng(seed).permutation(ids).tolist()
    groups = tuple(tuple(sorted(shuffled[q::n_subservers])) for q in range(n_subservers))
    return Topology(tuple(partitions), groups)


def plan_clusters(client: ClientPartition, cfg: ClusterConfig) -> ClusterSet | None:
    """Clustering to use for ``client``, or None to train on it whole."""
    if client.sample_count <= cfg.min_samples_to_cluster:
        return None
    cs = maxmin_cluster(client.data.features, cfg)
    if cs.n_clusters < 2 or not accept_clustering(cs, client.data.features, cfg):
        return None
    return cs


_UNPLANNED = object()


def aggregate(updates: Sequence[LocalUpdate], cfg: FedConfig) -> tuple[np.ndarray, AggregationWeights]:
    if cfg.aggregation == DEVIATION:
        return deviation_weighted_average_with_weights(updates, cfg.epsilon, cfg.weighting)
    mean = sample_weighted_mean(updates)
    counts = np.array([u.sample_count for u in updates], dtype=float)
    dev = np.array([np.linalg.norm(mean - u.params) for u in updates])
    return mean, AggregationWeights(counts / counts.sum(), dev, False)


def client_update(
    client: ClientPartition,
    w_t: np.ndarray,
    cfg: FedConfig,
    round_index: int,
    plan=_UNPLANNED,
    trainer: Trainer = sgd_trainer,
) -> LocalUpdate:
    """One client's contribution for a round.

    Large clients whose clustering is accepted train one model per cluster,
    each from ``w_t``, and merge them with the configured aggregation rule.
    Otherwise the whole client trains as cluster 0.
    """
    if plan is _UNPLANNED:
        plan = plan_clusters(client, cfg.cluster_config) if cfg.use_clustering else None
    seed_of = lambda j: derive_seed(cfg.global_seed, client.client_id, round_index, j)  # noqa: E731

    if plan is None:
        params = trainer(w_t, client.data, cfg, seed_of(0))
        return LocalUpdate(params, client.sample_count, client.client_id)

    sub_updates = []
    for j in range(plan.n_clusters):
        part = client.data.take(plan.members(j))
        sub_updates.append(LocalUpdate(trainer(w_t, part, cfg, seed_of(j)), part.n, j))
    params, _ = aggregate(sub_updates, cfg)
    return LocalUpdate(params, client.sample_count, client.client_id)


class _Runner:
    """Holds per-experiment state that does not change between rounds."""

    def __init__(self, topo: Topology, cfg: FedConfig, trainer: Trainer):
        self.topo = topo
        self.cfg = cfg
        self.trainer = trainer
        self.plans = {
            c.client_id: plan_clusters(c, cfg.cluster_config) if cfg.use_clustering else None
            for c in topo.clients
        }
        self.by_id = {c.client_id: c for c in topo.clients}

    def participants(self, round_index: int) -> list[int]:
        ids = [c.client_id for c in self.topo.clients]
        if self.cfg.participation >= 1:
            return ids
        count = max(1, round(self.cfg.participation * len(ids)))
        rng = np.random.default_rng(derive_seed(self.cfg.global_seed, PARTICIPATION_STREAM, round_index))
        return sorted(rng.choice(ids, size=count, replace=False).tolist())

    def client_updates(self, ids: Sequence[int], w_t: np.ndarray, round_index: int) -> dict[int, LocalUpdate]:
        def one(cid):
            return client_update(
                self.by_id[cid], w_t, self.cfg, round_index, self.plans[cid], self.trainer
            )

        if self.cfg.workers > 1 and len(ids) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                results = list(pool.map(one, ids))
        else:
            results = [one(cid) for cid in ids]
        return dict(zip(ids, results))

    def step(self, state: RoundState) -> tuple[RoundState, list[WeightRecord]]:
        t = state.round_index + 1
        ids = self.participants(t)
        updates = self.client_updates(ids, state.global_params, t)
        if self.topo.hierarchical:
            tier = []
            for q, group in enumerate(self.topo.subservers):
                members = [updates[cid] for cid in group if cid in updates]
                if not members:
                    continue
                params, _ = aggregate(members, self.cfg)
                tier.append(LocalUpdate(params, sum(u.sample_count for u in members), q))
        else:
            tier = [updates[cid] for cid in ids]
        params, weights = aggregate(tier, self.cfg)
        records = [
            WeightRecord(t, u.source_id, float(w), float(d), weights.fallback_used)
            for u, w, d in zip(tier, weights.weights, weights.deviations)
        ]
        return replace(state, round_index=t, global_params=params), records


def server_round(
    state: RoundState, topo: Topology, cfg: FedConfig, trainer: Trainer = sgd_trainer
) -> RoundState:
    if topo.hierarchical:
        raise InvalidTopology("server_round expects a flat topology")
    return _Runner(topo, cfg, trainer).step(state)[0]


def subserver_round(
    state: RoundState, topo: Topology, cfg: FedConfig, trainer: Trainer = sgd_trainer
) -> RoundState:
    if not topo.hierarchical:
        raise InvalidTopology("subserver_round expects a hierarchical topology")
    return _Runner(topo, cfg, trainer).step(state)[0]


def evaluate(w: np.ndarray, test: Dataset, round_index: int, algorithm: str) -> RoundLog:
    scores = predict_prob(w, test.features)
    cm = metrics.confusion(scores, test.labels, 0.5)
    try:
        curve = metrics.roc_curve(scores, test.labels)
        auc, ks = metrics.auc(curve), metrics.ks_statistic(curve)
    except SingleClassInput:
        auc = ks = float("nan")
    return RoundLog(
        round=round_index,
        algorithm=algorithm,
        accuracy=metrics.accuracy(cm),
        precision=metrics.precision(cm),
        recall=metrics.recall(cm),
        f1=metrics.f1(cm),
        auc=auc,
        ks=ks,
    )


def run_experiment(
    cfg: FedConfig,
    topo: Topology,
    test: Dataset,
    algorithm: str = "",
    trainer: Trainer = sgd_trainer,
    weight_log: list[WeightRecord] | None = None,
) -> ExperimentResult:
    """Train from the zero vector for ``cfg.rounds`` rounds, scoring each round on ``test``."""
    p = topo.clients[0].data.p
    if test.p != p:
        raise ValueError(f"test set has {test.p} features, clients have {p}")
    runner = _Runner(topo, cfg, trainer)
    n_clustered = sum(plan is not None for plan in runner.plans.values())
    logger.info("%s: %d/%d clients train per cluster", algorithm or "run", n_clustered, len(topo.clients))

    state = RoundState(0, np.zeros(p + 1), cfg.global_seed)
    logs = []
    for _ in range(cfg.rounds):
        state, records = runner.step(state)
        if weight_log is not None:
            weight_log.extend(records)
        logs.append(evaluate(state.global_params, test, state.round_index, algorithm))
    return ExperimentResult(logs, state.global_params)
