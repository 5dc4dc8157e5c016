"""Synthetic stand-in for the Kaggle cardiovascular-disease table.

Same column names and units as ``cardio_train.csv`` (age in days, gender
1 = female / 2 = male, blood pressure in mmHg, ordinal cholesterol and
glucose, binary lifestyle flags). The marginal ranges and the gender split
(about 35 % male) follow the public data; the label is drawn from a fixed
logistic model over age, blood pressure, weight and cholesterol.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataio import Schema

FEATURES = (
    "age",
    "gender",
    "height",
    "weight",
    "ap_hi",
    "ap_lo",
    "cholesterol",
    "gluc",
    "smoke",
    "alco",
    "active",
)
TARGET = "cardio"
ID_COLUMN = "id"
CARDIO_SCHEMA = Schema(FEATURES, TARGET, delimiter=";", id_column=ID_COLUMN)

DEFAULT_SEED = 20210601


def generate(n: int = 10_000, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Return an ``n x 13`` array of (id, 11 features, label) rows."""
    rng = np.random.default_rng(seed)
    male = rng.random(n) < 0.35
    age_years = rng.uniform(39.0, 65.0, n)
    height = np.where(male, rng.normal(170.0, 7.0, n), rng.normal(161.0, 6.5, n))
    weight = 72.0 + 4.0 * male + 0.6 * (height - 164.0) + rng.normal(0.0, 13.0, n)

    cholesterol = 1 + (rng.random(n) < 0.15 + 0.006 * (age_years - 39)) + (rng.random(n) < 0.10)
    gluc = 1 + (rng.random(n) < 0.10 + 0.003 * (age_years - 39)) + (rng.random(n) < 0.06)

    ap_hi = (
        118.0
        + 0.45 * (age_years - 52.0)
        + 0.30 * (weight - 74.0)
        + 3.0 * male
        + 4.0 * (cholesterol - 1)
        + rng.normal(0.0, 14.0, n)
    )
    ap_lo = 0.55 * ap_hi + 12.0 + rng.normal(0.0, 7.0, n)

    smoke = rng.random(n) < np.where(male, 0.22, 0.02)
    alco = rng.random(n) < np.where(male, 0.11, 0.025)
    active = rng.random(n) < 0.80

    logit = (
        0.35
        + 0.055 * (age_years - 52.0)
        + 0.065 * (ap_hi - 126.0)
        + 0.012 * (weight - 74.0)
        + 0.45 * (cholesterol - 1)
        + 0.10 * (gluc - 1)
        + 0.10 * smoke
        - 0.15 * alco
        - 0.20 * active
    )
    label = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))

    return np.column_stack(
        [
            np.arange(n),
            np.round(age_years * 365.25),
            np.where(male, 2, 1),
            np.round(height),
            np.round(weight, 1),
            np.round(ap_hi),
            np.round(ap_lo),
            cholesterol,
            gluc,
            smoke,
            alco,
            active,
            label,
        ]
    )


def write_csv(path: str | Path, n: int = 10_000, seed: int = DEFAULT_SEED) -> Path:
    path = Path(path)
    rows = generate(n, seed)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=";", lineterminator="\n")
        writer.writerow((ID_COLUMN,) + FEATURES + (TARGET,))
        for row in rows:
            writer.writerow([f"{v:g}" for v in row])
    return path
