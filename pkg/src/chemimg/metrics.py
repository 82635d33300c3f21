"""Evaluation metrics: rank-based ROC AUC and RMSE.

roc_auc uses the Mann-Whitney average-rank formulation, which equals the
exhaustive concordant-pair count (ties worth one half) exactly, not just
to rounding error: both reduce to the same numerator over pos*neg.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    pass


class SingleClass(MetricError):
    """AUC asked for a task whose unmasked labels are all one class."""


class Empty(MetricError):
    pass


def roc_auc(scores, labels, mask=None) -> float:
    """Probability a random positive outranks a random negative.

    `mask` (optional, 1 = present) drops entries with missing labels.
    Raises SingleClass unless both classes appear.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if mask is not None:
        keep = np.asarray(mask, dtype=bool).ravel()
        scores, labels = scores[keep], labels[keep]
    pos = labels == 1.0
    neg = labels == 0.0
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(
            f"need both classes, got {n_pos} positive / {n_neg} negative")

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        # 1-based ranks; ties share the average rank of their run
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    numerator = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(numerator / (n_pos * n_neg))


def rmse(preds, targets) -> float:
    preds = np.asarray(preds, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if preds.size == 0:
        raise Empty("rmse of zero pairs")
    if preds.size != targets.size:
        raise MetricError(
            f"length mismatch: {preds.size} predictions vs {targets.size} "
            f"targets")
    return float(np.sqrt(np.mean((preds - targets) ** 2)))


@dataclass
class EvalReport:
    """Per-task metric values plus their mean over defined tasks.

    Tasks where the metric is undefined (single-class) carry NaN and are
    excluded from the aggregate.
    """

    task_values: list[float]
    aggregate: float
    metric: str = "auc"

    def csv_row(self) -> str:
        cells = [f"{v:.6f}" if np.isfinite(v) else "" for v in
                 self.task_values]
        return ",".join([f"{self.aggregate:.6f}"] + cells)


def classification_report(scores, labels, mask) -> EvalReport:
    """Task-mean AUC over a (N, tasks) score block."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    mask = np.atleast_2d(np.asarray(mask, dtype=np.float64))
    values = []
    for t in range(scores.shape[1]):
        try:
            values.append(roc_auc(scores[:, t], labels[:, t], mask[:, t]))
        except SingleClass:
            values.append(float("nan"))
    defined = [v for v in values if np.isfinite(v)]
    aggregate = float(np.mean(defined)) if defined else float("nan")
    return EvalReport(task_values=values, aggregate=aggregate, metric="auc")


def regression_report(preds, targets, mask) -> EvalReport:
    preds = np.atleast_2d(np.asarray(preds, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    mask = np.atleast_2d(np.asarray(mask, dtype=np.float64))
    values = []
    for t in range(preds.shape[1]):
        keep = mask[:, t] == 1.0
        if not keep.any():
            values.append(float("nan"))
            continue
        values.append(rmse(preds[keep, t], targets[keep, t]))
    defined = [v for v in values if np.isfinite(v)]
    aggregate = float(np.mean(defined)) if defined else float("nan")
    return EvalReport(task_values=values, aggregate=aggregate, metric="rmse")
