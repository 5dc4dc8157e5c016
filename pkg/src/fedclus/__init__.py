"""Simulated federated learning with cluster- and deviation-weighted aggregation."""

from .aggregation import (
    LocalUpdate,
    deviation_weighted_average,
    deviation_weights,
    fedavg_average,
    sample_weighted_mean,
)
from .clustering import ClusterConfig, ClusterSet, accept_clustering, avg_pairwise_distance, maxmin_cluster
from .dataio import ClientPartition, Dataset, Schema, load_csv, standardize
from .federation import FedConfig, RoundLog, Topology, build_topology, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ClientPartition",
    "ClusterConfig",
    "ClusterSet",
    "Dataset",
    "FedConfig",
    "LocalUpdate",
    "RoundLog",
    "Schema",
    "Topology",
    "accept_clustering",
    "avg_pairwise_distance",
    "build_topology",
    "deviation_weighted_average",
    "deviation_weights",
    "fedavg_average",
    "load_csv",
    "maxmin_cluster",
    "run_experiment",
    "sample_weighted_mean",
    "standardize",
]
