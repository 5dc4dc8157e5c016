"""Max-min distance clustering of a client's samples into virtual sub-clients.

Centers are picked greedily: the first sample, then the sample farthest
from it, then repeatedly the sample whose distance to its nearest center
is largest, as long as that distance exceeds ``theta`` times the distance
between the first two centers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
from scipy.spatial.distance import pdist

from .errors import TooFewSamples


@dataclass(frozen=True)
class ClusterConfig:
    theta: float = 0.5
    min_samples_to_cluster: int = 300
    max_clusters: int | None = None
    samples_per_cluster: int = 50
    acceptance_factor: float = 1.2

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.min_samples_to_cluster < 2:
            raise ValueError("min_samples_to_cluster must be >= 2")
        if self.max_clusters is not None and self.max_clusters < 1:
            raise ValueError("max_clusters must be >= 1")
        if self.samples_per_cluster < 1:
            raise ValueError("samples_per_cluster must be >= 1")
        if not self.acceptance_factor > 0:
            raise ValueError("acceptance_factor must be > 0")

    def cluster_cap(self, n: int) -> int:
        """Upper bound on the number of centers for a client of ``n`` samples."""
        if self.max_clusters is not None:
            return self.max_clusters
        return max(1, math.ceil(n / self.samples_per_cluster))


@dataclass(frozen=True)
class ClusterSet:
    assignments: np.ndarray
    center_indices: tuple[int, ...]
    centers: np.ndarray
    cluster_sizes: tuple[int, ...]
    # distance between the first two centers, and for each later center the
    # nearest-center distance it had when it was picked
    d12: float = 0.0
    selection_distances: tuple[float, ...] = ()

    @property
    def n_clusters(self) -> int:
        return len(self.center_indices)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == j)


def _distances_to(samples: np.ndarray, point: np.ndarray) -> np.ndarray:
    return np.sqrt(((samples - point) ** 2).sum(axis=1))


def maxmin_cluster(samples: np.ndarray, cfg: ClusterConfig) -> ClusterSet:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    n = samples.shape[0]
    if n < 2:
        raise TooFewSamples(f"clustering needs at least 2 samples, got {n}")
    cap = cfg.cluster_cap(n)

    centers = [0]
    nearest = _distances_to(samples, samples[0])
    z2 = int(np.argmax(nearest))
    d12 = float(nearest[z2])
    selection: list[float] = []
    if d12 > 0 and cap >= 2:
        centers.append(z2)
        nearest = np.minimum(nearest, _distances_to(samples, samples[z2]))
        threshold = cfg.theta * d12
        while len(centers) < cap:
            s = int(np.argmax(nearest))
            ds = float(nearest[s])
            if not ds > threshold:
                break
            centers.append(s)
            selection.append(ds)
            nearest = np.minimum(nearest, _distances_to(samples, samples[s]))

    center_pts = samples[centers]
    dist = np.sqrt(((samples[:, None, :] - center_pts[None, :, :]) ** 2).sum(axis=2))
    assignments = np.argmin(dist, axis=1)
    sizes = np.bincount(assignments, minlength=len(centers))
    return ClusterSet(
        assignments=assignments,
        center_indices=tuple(centers),
        centers=center_pts,
        cluster_sizes=tuple(int(s) for s in sizes),
        d12=d12,
        selection_distances=tuple(selection),
    )


def avg_pairwise_distance(samples: np.ndarray) -> float:
    """Mean Euclidean distance over all unordered pairs of rows."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] < 2:
        raise TooFewSamples("pairwise distance needs at least 2 samples")
    return float(pdist(samples).mean())


def accept_clustering(cs: ClusterSet, samples: np.ndarray, cfg: ClusterConfig) -> bool:
    """Keep the clustering only if its loosest cluster is tighter than the client.

    A cluster's spread is its average intra-cluster pairwise distance
    (0 for singletons). The comparison is strict: a client of identical
    samples (both sides 0) is rejected.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    spreads = []
    for j in range(cs.n_clusters):
        members = cs.members(j)
        spreads.append(avg_pairwise_distance(samples[members]) if len(members) >= 2 else 0.0)
    return max(spreads) < cfg.acceptance_factor * avg_pairwise_distance(samples)


def write_cluster_report(rows: Iterable[tuple[int, ClusterSet]], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["client_id", "cluster_id", "size"])
    for client_id, cs in rows:
        for j, size in enumerate(cs.cluster_sizes):
            writer.writerow([client_id, j, size])
