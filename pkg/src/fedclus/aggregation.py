"""Combining local parameter vectors into one.

Two rules are provided: the sample-weighted mean used by FedAvg, and the
deviation-weighted average used by FedClusAvg, where each update's share is
its Euclidean distance from the sample-weighted mean divided by the sum of
all such distances.

All sums run in ``source_id`` order so the result does not depend on the
order updates arrive in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyUpdateSet

AS_WRITTEN = "as-written"
INVERSE_DEVIATION = "inverse-deviation"
WEIGHTING_MODES = (AS_WRITTEN, INVERSE_DEVIATION)
DEFAULT_EPSILON = 1e-12


@dataclass(frozen=True)
class LocalUpdate:
    params: np.ndarray
    sample_count: int
    source_id: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        params = np.asarray(self.params, dtype=float)
        if not np.isfinite(params).all():
            raise ValueError(f"update from source {self.source_id} has non-finite params")
        object.__setattr__(self, "params", params)


@dataclass(frozen=True)
class AggregationWeights:
    """Weights aligned with the input order of the updates."""

    weights: np.ndarray
    deviations: np.ndarray
    fallback_used: bool


def _ordered(updates: Sequence[LocalUpdate]) -> list[int]:
    if not updates:
        raise EmptyUpdateSet("no updates to aggregate")
    dim = updates[0].params.shape
    for u in updates:
        if u.params.shape != dim:
            raise DimensionMismatch(
                f"source {u.source_id} has shape {u.params.shape}, expected {dim}"
            )
    return sorted(range(len(updates)), key=lambda i: updates[i].source_id)


def _proportions(updates: Sequence[LocalUpdate], order: list[int]) -> np.ndarray:
    counts = np.array([updates[i].sample_count for i in order], dtype=float)
    return counts / counts.sum()


def _combine(updates: Sequence[LocalUpdate], order: list[int], weights: np.ndarray) -> np.ndarray:
    # weights are in `order`; accumulate left to right for a fixed summation order
    total = weights[0] * updates[order[0]].params
    for w, i in zip(weights[1:], order[1:]):
        total = total + w * updates[i].params
    return total


def _unsort(values: np.ndarray, order: list[int]) -> np.ndarray:
    out = np.empty_like(values)
    out[order] = values
    return out


def sample_weighted_mean(updates: Sequence[LocalUpdate]) -> np.ndarray:
    order = _ordered(updates)
    return _combine(updates, order, _proportions(updates, order))


def fedavg_average(updates: Sequence[LocalUpdate]) -> np.ndarray:
    """FedAvg aggregation: identical to :func:`sample_weighted_mean`."""
    return sample_weighted_mean(updates)


def deviation_weights(
    updates: Sequence[LocalUpdate],
    mean: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    mode: str = AS_WRITTEN,
) -> AggregationWeights:
    """Shares proportional to each update's distance from ``mean``.

    ``mode="inverse-deviation"`` uses 1 / (distance + epsilon) instead. When
    the distances sum to less than ``epsilon`` (all updates agree) both modes
    fall back to sample proportions.
    """
    if mode not in WEIGHTING_MODES:
        raise ValueError(f"unknown weighting mode {mode!r}")
    order = _ordered(updates)
    mean = np.asarray(mean, dtype=float)
    dev = np.array([np.linalg.norm(mean - updates[i].params) for i in order])
    total = dev.sum()
    if total < epsilon:
        weights = _proportions(updates, order)
        fallback = True
    elif mode == AS_WRITTEN:
        weights = dev / total
        fallback = False
    else:
        inv = 1.0 / (dev + epsilon)
        weights = inv / inv.sum()
        fallback = False
    return AggregationWeights(_unsort(weights, order), _unsort(dev, order), fallback)


def deviation_weighted_average(
    updates: Sequence[LocalUpdate],
    epsilon: float = DEFAULT_EPSILON,
    mode: str = AS_WRITTEN,
) -> np.ndarray:
    return deviation_weighted_average_with_weights(updates, epsilon, mode)[0]


def deviation_weighted_average_with_weights(
    updates: Sequence[LocalUpdate],
    epsilon: float = DEFAULT_EPSILON,
    mode: str = AS_WRITTEN,
) -> tuple[np.ndarray, AggregationWeights]:
    order = _ordered(updates)
    mean = _combine(updates, order, _proportions(updates, order))
    aw = deviation_weights(updates, mean, epsilon, mode)
    return _combine(updates, order, aw.weights[order]), aw
