"""Masked losses: mean over present labels, gradient in the same call."""

from __future__ import annotations

import warnings

import numpy as np

CLAMP = 1e-7


class AllMaskedWarning(UserWarning):
    """Every label in the batch is missing; loss and gradient are zero."""


def masked_bce_loss(pred: np.ndarray, labels: np.ndarray,
                    mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross-entropy over unmasked entries.

    `pred` must already be in (0, 1); values are clamped away from the
    exact endpoints before the logs. Returns (scalar loss, dL/dpred).
    """
    pred = np.asarray(pred)
    labels = np.asarray(labels, dtype=pred.dtype)
    mask = np.asarray(mask, dtype=pred.dtype)
    total = mask.sum()
    if total == 0:
        warnings.warn("batch has no labels at all", AllMaskedWarning)
        return 0.0, np.zeros_like(pred)
    p = np.clip(pred, CLAMP, 1.0 - CLAMP)
    per_entry = -(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p))
    loss = float((per_entry * mask).sum() / total)
    grad = mask * (p - labels) / (p * (1.0 - p)) / total
    return loss, grad.astype(pred.dtype, copy=False)


def mse_loss(pred: np.ndarray, targets: np.ndarray,
             mask: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Mean squared error over unmasked entries; returns (loss, dL/dpred)."""
    pred = np.asarray(pred)
    targets = np.asarray(targets, dtype=pred.dtype)
    if mask is None:
        mask = np.ones_like(pred)
    else:
        mask = np.asarray(mask, dtype=pred.dtype)
    total = mask.sum()
    if total == 0:
        warnings.warn("batch has no labels at all", AllMaskedWarning)
        return 0.0, np.zeros_like(pred)
    diff = (pred - targets) * mask
    loss = float((diff ** 2).sum() / total)
    grad = (2.0 * diff / total).astype(pred.dtype, copy=False)
    return loss, grad
