"""Binary classification scores, ROC curve, AUC and the KS statistic.

Scores at or above the threshold count as positive. Ratios whose
denominator is zero come back as ``nan`` rather than 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import LengthMismatch, SingleClassInput


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.shape[0]} scores vs {labels.shape[0]} labels")
    if scores.size == 0:
        raise LengthMismatch("no samples to evaluate")
    return scores, labels.astype(bool)


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionMatrix:
    scores, labels = _check(scores, labels)
    pred = scores >= threshold
    return ConfusionMatrix(
        tp=int(np.sum(pred & labels)),
        fp=int(np.sum(pred & ~labels)),
        fn=int(np.sum(~pred & labels)),
        tn=int(np.sum(~pred & ~labels)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


def accuracy(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.tn, cm.total)


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp)


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn)


def f1(cm: ConfusionMatrix) -> float:
    return _ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)


def roc_curve(scores, labels) -> RocCurve:
    """ROC points for every distinct score used as a threshold.

    The first point is the +inf threshold at (0, 0); tied scores collapse
    into a single point.
    """
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("ROC needs both positive and negative samples")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(~sorted_labels)
    # keep the last index of each run of equal scores
    last = np.r_[np.flatnonzero(np.diff(sorted_scores) != 0), sorted_scores.size - 1]
    tpr = np.r_[0.0, tp[last] / n_pos]
    fpr = np.r_[0.0, fp[last] / n_neg]
    thresholds = np.r_[np.inf, sorted_scores[last]]
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds)


def auc(curve: RocCurve) -> float:
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2))


def ks_statistic(curve: RocCurve) -> float:
    return float(np.max(curve.tpr - curve.fpr))


def write_roc(curve: RocCurve, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["threshold", "fpr", "tpr"])
    for t, x, y in zip(curve.thresholds, curve.fpr, curve.tpr):
        writer.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


def write_ks_curve(curve: RocCurve, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["threshold", "tpr", "fpr", "diff"])
    for t, x, y in zip(curve.thresholds, curve.fpr, curve.tpr):
        writer.writerow([repr(float(t)), repr(float(y)), repr(float(x)), repr(float(y - x))])
