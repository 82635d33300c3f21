"""Figure rendering for experiment outputs.

Every figure lands next to its CSV so a run directory reads as a
self-contained report. The Agg backend keeps this headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def save_history_figure(history, path, title: str = "training") -> None:
    """Loss curves with the validation metric on a twin axis."""
    epochs = [row["epoch"] for row in history]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(epochs, [row["train_loss"] for row in history],
            label="train loss", color="tab:blue")
    ax.plot(epochs, [row["val_loss"] for row in history],
            label="validation loss", color="tab:orange")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    metric = [row["val_metric"] for row in history]
    if any(np.isfinite(m) for m in metric):
        twin = ax.twinx()
        twin.plot(epochs, metric, label="validation metric",
                  color="tab:green", linestyle="--")
        twin.set_ylabel("validation metric")
        lines, labels = ax.get_legend_handles_labels()
        tl, tlab = twin.get_legend_handles_labels()
        ax.legend(lines + tl, labels + tlab, loc="best")
    else:
        ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_controls_figure(rows, path) -> None:
    """Bar chart of control AUCs against their pass bands.

    `rows` are dicts with keys: experiment, auc, band_lo, band_hi,
    status.
    """
    fig, ax = plt.subplots(figsize=(6.5, 4))
    names = [r["experiment"] for r in rows]
    xs = np.arange(len(rows))
    for x, row in zip(xs, rows):
        ax.add_patch(plt.Rectangle(
            (x - 0.4, row["band_lo"]), 0.8,
            row["band_hi"] - row["band_lo"],
            color="tab:green", alpha=0.15, zorder=0))
        color = "tab:green" if row["status"] == "PASS" else "tab:red"
        ax.bar(x, row["auc"], width=0.5, color=color, zorder=2)
    ax.axhline(0.5, color="gray", linestyle=":", linewidth=1)
    ax.set_xticks(xs)
    ax.set_xticklabels(names)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("validation AUC")
    ax.set_title("control experiments (shaded = pass band)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_fold_metric_figure(fold_values, test_value, metric_name,
                            path) -> None:
    """Per-fold validation metric bars plus the test metric line."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    xs = np.arange(len(fold_values))
    ax.bar(xs, fold_values, width=0.6, color="tab:blue",
           label="fold validation")
    if np.isfinite(test_value):
        ax.axhline(test_value, color="tab:red", linestyle="--",
                   label=f"test ({test_value:.3f})")
    ax.set_xticks(xs)
    ax.set_xticklabels([f"fold {i}" for i in range(len(fold_values))])
    ax.set_ylabel(metric_name)
    ax.set_title("evaluation")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_channel_figure(image, path, title: str = "") -> None:
    """One panel per channel of a single encoded image."""
    channels = image.shape[-1]
    fig, axes = plt.subplots(1, channels,
                             figsize=(3.2 * channels, 3.4), squeeze=False)
    for c in range(channels):
        ax = axes[0][c]
        shown = ax.imshow(image[:, :, c], cmap="viridis",
                          interpolation="nearest")
        ax.set_title(f"channel {c}")
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(shown, ax=ax, fraction=0.046)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
