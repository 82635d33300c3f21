"""From-scratch trainable CNN: layers, blocks, losses, optimizer, training."""

from .layers import (
    Conv2D,
    Dense,
    GlobalAvgPool,
    MaxPool2D,
    ReLU,
    ShapeMismatch,
    Sigmoid,
)
from .blocks import InceptionResnetBlock, ReductionBlock
from .losses import AllMaskedWarning, masked_bce_loss, mse_loss
from .network import (
    CheckpointError,
    ConfigError,
    Network,
    NetworkConfig,
    build_network,
    load_checkpoint,
    parse_arch,
    save_checkpoint,
    set_debug_nan_checks,
)
from .optim import RMSprop, rmsprop_step
from .training import (
    ChannelStandardizer,
    TrainedModel,
    read_history_csv,
    train,
    write_history_csv,
)

__all__ = [
    "AllMaskedWarning", "ChannelStandardizer", "CheckpointError",
    "ConfigError", "Conv2D", "Dense", "GlobalAvgPool",
    "InceptionResnetBlock", "MaxPool2D", "Network", "NetworkConfig",
    "ReLU", "ReductionBlock", "RMSprop", "ShapeMismatch", "Sigmoid",
    "TrainedModel", "build_network", "load_checkpoint", "masked_bce_loss",
    "mse_loss", "parse_arch", "read_history_csv", "rmsprop_step",
    "save_checkpoint", "set_debug_nan_checks", "train", "write_history_csv",
]
