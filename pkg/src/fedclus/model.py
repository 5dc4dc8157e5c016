"""Logistic regression with an intercept, trained by mini-batch SGD.

Parameters are plain float vectors of length p + 1 with the intercept at
index 0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, InvalidHyperparameter

PROB_EPS = 1e-12
LOGIT_CLIP = 500.0


def zeros(p: int) -> np.ndarray:
    return np.zeros(p + 1)


def _check_dim(w: np.ndarray, features: np.ndarray) -> None:
    if features.shape[-1] + 1 != w.shape[0]:
        raise DimensionMismatch(
            f"params have dimension {w.shape[0]}, features need {features.shape[-1] + 1}"
        )


def _augment(features: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((features.shape[0], 1)), features])


def predict_prob(w: np.ndarray, features: np.ndarray) -> np.ndarray | float:
    """Positive-class probability for one sample or a matrix of samples."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(features, dtype=float)
    _check_dim(w, x)
    z = x @ w[1:] + w[0]
    return expit(np.clip(z, -LOGIT_CLIP, LOGIT_CLIP))


def loss(w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy; probabilities clamped to [1e-12, 1 - 1e-12]."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=float)
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    prob = np.clip(predict_prob(w, features), PROB_EPS, 1 - PROB_EPS)
    return float(-np.mean(labels * np.log(prob) + (1 - labels) * np.log1p(-prob)))


def gradient(w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=float)
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    residual = predict_prob(w, features) - labels
    return _augment(features).T @ residual / features.shape[0]


def sgd_train(
    w0: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    batch_size: int,
    epochs: int,
    lr: float,
    seed: int,
) -> np.ndarray:
    """Run ``epochs`` passes of mini-batch SGD starting from ``w0``.

    Each epoch draws a fresh permutation from ``(seed, epoch)`` and walks
    it in batches of ``batch_size`` (the last batch may be short).
    """
    if epochs < 1:
        raise InvalidHyperparameter(f"epochs must be >= 1, got {epochs}")
    if batch_size < 1:
        raise InvalidHyperparameter(f"batch_size must be >= 1, got {batch_size}")
    if not lr >= 0:
        raise InvalidHyperparameter(f"learning rate must be >= 0, got {lr}")
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.shape[0] == 0:
        raise InvalidHyperparameter("cannot train on an empty dataset")
    w = np.array(w0, dtype=float)
    _check_dim(w, features)

    xa = _augment(features)
    n = xa.shape[0]
    for epoch in range(epochs):
        order = np.random.default_rng([seed, epoch]).permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb = xa[idx]
            residual = expit(np.clip(xb @ w, -LOGIT_CLIP, LOGIT_CLIP)) - labels[idx]
            w -= lr * (xb.T @ residual) / len(idx)
    return w


def save_params(w: np.ndarray, path: str | Path) -> None:
    lines = [f"dim={len(w)}"] + [repr(float(v)) for v in w]
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path: str | Path) -> np.ndarray:
    lines = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise ValueError(f"{path}: missing 'dim=' header")
    dim = int(lines[0][4:])
    values = np.array([float(v) for v in lines[1:]])
    if values.shape[0] != dim:
        raise DimensionMismatch(f"{path}: header says {dim} weights, found {values.shape[0]}")
    return values
