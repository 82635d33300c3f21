"""Epoch loop with RMSprop, masked validation loss, and early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..metrics import classification_report, regression_report
from .losses import masked_bce_loss, mse_loss
from .network import Network
from .optim import RMSprop

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "val_metric")


class ChannelStandardizer:
    """Per-channel affine rescale fit on training images.

    Stands in for batch normalization at this scale: charge channels
    (~0.1) and atomic-number channels (~6..17) land on comparable
    ranges. Near-constant channels pass through unscaled.
    """

    def __init__(self, mean=None, std=None):
        self.mean = None if mean is None else np.asarray(mean, np.float64)
        self.std = None if std is None else np.asarray(std, np.float64)

    def fit(self, images: np.ndarray) -> "ChannelStandardizer":
        images = np.asarray(images, dtype=np.float64)
        self.mean = images.mean(axis=(0, 1, 2))
        std = images.std(axis=(0, 1, 2))
        self.std = np.where(std < 1e-8, 1.0, std)
        return self

    def transform(self, images: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise ValueError("standardizer has not been fit")
        out = (np.asarray(images, dtype=np.float64) - self.mean) / self.std
        return out.astype(np.asarray(images).dtype, copy=False)

    def to_dict(self) -> dict:
        if self.mean is None:
            raise ValueError("standardizer has not been fit")
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelStandardizer":
        return cls(mean=data["mean"], std=data["std"])


@dataclass
class TrainedModel:
    network: Network
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    standardizer: ChannelStandardizer | None = None


def _loss_and_metric(head: str):
    if head == "sigmoid":
        return masked_bce_loss, lambda p, y, m: classification_report(
            p, y, m).aggregate
    return mse_loss, lambda p, y, m: regression_report(p, y, m).aggregate


def _validate(network, val_data, loss_fn, metric_fn, standardizer):
    images, labels, mask = val_data
    if standardizer is not None:
        images = standardizer.transform(images)
    preds = network.predict(images)
    loss, _ = loss_fn(preds, labels, mask)
    return loss, metric_fn(preds, labels, mask)


def train(network: Network, stream, val_data, epochs: int = 100,
          patience: int = 25, lr: float = 1e-3, rho: float = 0.9,
          eps: float = 1e-8, standardizer: ChannelStandardizer | None = None,
          log=None) -> TrainedModel:
    """Fit `network` on `stream`, early-stopping on validation loss.

    `stream.epoch(i)` must yield (images, labels, mask) batches and
    replay identically for the same i; `val_data` is a full
    (images, labels, mask) triple, never augmented. The weights kept
    are those of the best-validation-loss epoch (ties keep the
    earlier epoch). `patience` counts consecutive non-improving
    epochs before stopping and must be >= 1.
    """
    if patience < 1:
        raise ValueError("patience must be at least 1")
    loss_fn, metric_fn = _loss_and_metric(network.config.head)
    optimizer = RMSprop(network.params(), lr=lr, rho=rho, eps=eps)
    best_loss = float("inf")
    best_weights = network.get_weights()
    best_epoch = 0
    stale = 0
    history = []
    for epoch in range(1, epochs + 1):
        loss_sum = 0.0
        weight_sum = 0.0
        for images, labels, mask in stream.epoch(epoch - 1):
            if standardizer is not None:
                images = standardizer.transform(images)
            preds = network.forward(images)
            loss, grad = loss_fn(preds, labels, mask)
            network.zero_grads()
            network.backward(grad)
            optimizer.step(network.params(), network.grads())
            present = float(np.sum(mask))
            loss_sum += loss * present
            weight_sum += present
        train_loss = loss_sum / weight_sum if weight_sum else 0.0
        val_loss, val_metric = _validate(
            network, val_data, loss_fn, metric_fn, standardizer)
        history.append({"epoch": epoch, "train_loss": train_loss,
                        "val_loss": val_loss, "val_metric": val_metric})
        if log is not None:
            log(f"epoch {epoch:3d}  train {train_loss:.5f}  "
                f"val {val_loss:.5f}  metric {val_metric:.4f}")
        if val_loss < best_loss:
            best_loss = val_loss
            best_weights = network.get_weights()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    network.set_weights(best_weights)
    return TrainedModel(network=network, history=history,
                        best_epoch=best_epoch, best_val_loss=best_loss,
                        standardizer=standardizer)


def write_history_csv(history, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(HISTORY_COLUMNS) + "\n")
        for row in history:
            fh.write(f"{row['epoch']},{row['train_loss']!r},"
                     f"{row['val_loss']!r},{row['val_metric']!r}\n")


def read_history_csv(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != HISTORY_COLUMNS:
            raise ValueError(f"unexpected history header {header}")
        for line in fh:
            cells = line.strip().split(",")
            rows.append({"epoch": int(cells[0]),
                         "train_loss": float(cells[1]),
                         "val_loss": float(cells[2]),
                         "val_metric": float(cells[3])})
    return rows
