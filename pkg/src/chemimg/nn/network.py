"""Network assembly, architecture naming, and checkpointing.

A T{d}_F{f} network is: 4x4 stride-2 stem conv (f channels, ReLU), then
three stages of [d Inception-ResNet blocks followed by one reduction
block], global average pooling, and a dense head. Channel widths grow
f -> 2f -> 3f -> 4f through the reductions.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .blocks import InceptionResnetBlock, ReductionBlock
from .layers import Conv2D, Dense, GlobalAvgPool, ReLU, Sigmoid

CMDL_MAGIC = b"CMDL"
CMDL_VERSION = 1

MIN_INPUT_SIZE = 16

_DEBUG_NAN_CHECK = False


def set_debug_nan_checks(enabled: bool) -> None:
    """Toggle per-layer finiteness asserts on every forward pass."""
    global _DEBUG_NAN_CHECK
    _DEBUG_NAN_CHECK = bool(enabled)


class ConfigError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    depth_t: int
    filters_f: int
    input_channels: int = 1
    tasks: int = 1
    head: str = "sigmoid"
    residual_scale: float = 1.0
    input_size: int = 80

    def __post_init__(self):
        if self.depth_t < 1 or self.filters_f < 1:
            raise ConfigError("depth and filters must be at least 1")
        if self.input_channels not in (1, 4):
            raise ConfigError(
                f"input_channels must be 1 or 4, got {self.input_channels}")
        if self.tasks < 1:
            raise ConfigError("tasks must be at least 1")
        if self.head not in ("sigmoid", "linear"):
            raise ConfigError(f"unknown head {self.head!r}")
        if self.input_size < MIN_INPUT_SIZE:
            raise ConfigError(
                f"input {self.input_size} too small: three reductions on "
                f"a stride-2 stem need at least {MIN_INPUT_SIZE} pixels")

    @property
    def name(self) -> str:
        return f"T{self.depth_t}_F{self.filters_f}"


def parse_arch(text: str) -> tuple[int, int]:
    """Parse a T<depth>_F<filters> architecture name."""
    m = re.fullmatch(r"T(\d+)_F(\d+)", text)
    if not m:
        raise ConfigError(
            f"architecture {text!r} does not match T<depth>_F<filters>")
    return int(m.group(1)), int(m.group(2))


class Network:
    """Sequential container with explicit forward/backward."""

    def __init__(self, config: NetworkConfig, layers, dtype):
        self.config = config
        self.layers = layers
        self.dtype = dtype

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.asarray(x, dtype=self.dtype)
        for layer in self.layers:
            h = layer.forward(h)
            if _DEBUG_NAN_CHECK and not np.isfinite(h).all():
                raise FloatingPointError(
                    f"non-finite values after {type(layer).__name__}")
        return h

    def backward(self, dy: np.ndarray) -> np.ndarray:
        h = np.asarray(dy, dtype=self.dtype)
        for layer in reversed(self.layers):
            h = layer.backward(h)
        return h

    def predict(self, x: np.ndarray, batch: int = 64) -> np.ndarray:
        """Forward in chunks; no caches kept beyond the last chunk."""
        outs = [self.forward(x[i:i + batch])
                for i in range(0, len(x), batch)]
        return np.concatenate(outs, axis=0)

    def get_weights(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params()]

    def set_weights(self, weights) -> None:
        own = self.params()
        if len(own) != len(weights):
            raise ConfigError(
                f"expected {len(own)} parameter tensors, got {len(weights)}")
        for p, w in zip(own, weights):
            if p.shape != w.shape:
                raise ConfigError(
                    f"parameter shape {w.shape} does not fit {p.shape}")
            p[...] = w


def build_network(config: NetworkConfig, seed: int = 0,
                  dtype=np.float32) -> Network:
    """Materialize a seeded network; same seed, same initial weights."""
    rng = np.random.default_rng(seed)
    f = config.filters_f
    layers = [Conv2D(config.input_channels, f, 4, stride=2, padding="same",
                     rng=rng, dtype=dtype), ReLU()]
    channels = f
    for _stage in range(3):
        for _ in range(config.depth_t):
            layers.append(InceptionResnetBlock(
                channels, f, residual_scale=config.residual_scale,
                rng=rng, dtype=dtype))
        layers.append(ReductionBlock(channels, f, rng=rng, dtype=dtype))
        channels += f
    layers.append(GlobalAvgPool())
    layers.append(Dense(channels, config.tasks, rng=rng, dtype=dtype))
    if config.head == "sigmoid":
        layers.append(Sigmoid())
    return Network(config, layers, dtype)


def save_checkpoint(network: Network, path) -> None:
    """CMDL container: config echo as JSON, then ordered f32 tensors."""
    blob = json.dumps(asdict(network.config), sort_keys=True).encode()
    params = network.params()
    try:
        with open(path, "wb") as fh:
            fh.write(CMDL_MAGIC)
            fh.write(struct.pack("<BBBB", CMDL_VERSION, 1, 1, 0))
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<I", len(params)))
            for p in params:
                fh.write(struct.pack("<I", p.ndim))
                fh.write(struct.pack(f"<{p.ndim}I", *p.shape))
                fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    except OSError as exc:
        raise CheckpointError(f"cannot write {path}: {exc}") from exc


def load_checkpoint(path, dtype=np.float32) -> Network:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    if raw[:4] != CMDL_MAGIC:
        raise CheckpointError(f"bad magic {raw[:4]!r}")
    version, p_dtype, _layout, _pad = struct.unpack("<BBBB", raw[4:8])
    if version != CMDL_VERSION or p_dtype != 1:
        raise CheckpointError(
            f"unsupported version {version} / dtype {p_dtype}")
    off = 8
    try:
        (blob_len,) = struct.unpack_from("<I", raw, off)
        off += 4
        config = NetworkConfig(**json.loads(raw[off:off + blob_len]))
        off += blob_len
        (count,) = struct.unpack_from("<I", raw, off)
        off += 4
        weights = []
        for _ in range(count):
            (rank,) = struct.unpack_from("<I", raw, off)
            off += 4
            shape = struct.unpack_from(f"<{rank}I", raw, off)
            off += 4 * rank
            size = int(np.prod(shape)) * 4
            if off + size > len(raw):
                raise CheckpointError("truncated parameter payload")
            tensor = np.frombuffer(raw[off:off + size], dtype="<f4")
            weights.append(tensor.reshape(shape).astype(dtype))
            off += size
    except CheckpointError:
        raise
    except (struct.error, json.JSONDecodeError, TypeError,
            ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    network = build_network(config, seed=0, dtype=dtype)
    network.set_weights(weights)
    return network
