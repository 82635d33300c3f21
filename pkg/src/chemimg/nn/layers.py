"""Layer primitives with explicit forward/backward passes.

Data layout is channel-last (N, H, W, C) throughout. Same-padding follows
the ceil(in/stride) output convention with the extra pad row/column on the
bottom/right. Layers cache what backward needs; backward accumulates
parameter gradients and returns the input gradient.
"""

from __future__ import annotations

import math

import numpy as np


class ShapeMismatch(ValueError):
    pass


def _pad_amounts(size: int, kernel: int, stride: int,
                 padding: str) -> tuple[int, int]:
    if padding == "valid":
        return 0, 0
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before


def conv_output_size(size: int, kernel: int, stride: int,
                     padding: str) -> int:
    if padding == "same":
        return -(-size // stride)
    return (size - kernel) // stride + 1


class Layer:
    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def zero_grads(self) -> None:
        for g in self.grads():
            g[...] = 0.0


class Conv2D(Layer):
    """Cross-correlation with fan-in-scaled uniform init."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 stride: int = 1, padding: str = "same",
                 rng: np.random.Generator | None = None,
                 dtype=np.float32):
        if padding not in ("same", "valid"):
            raise ShapeMismatch(f"unknown padding {padding!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = kernel * kernel * in_channels
        limit = math.sqrt(3.0 / fan_in)
        self.w = rng.uniform(-limit, limit,
                             (kernel, kernel, in_channels, out_channels)
                             ).astype(dtype)
        # nonzero bias keeps pre-activations off the exact ReLU kink at
        # all-zero input patches, which would break finite-difference checks
        self.b = rng.uniform(-limit, limit, out_channels).astype(dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self.stride = stride
        self.padding = padding
        self._cache = None

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def forward(self, x: np.ndarray) -> np.ndarray:
        kh, kw, cin, cout = self.w.shape
        if x.ndim != 4 or x.shape[3] != cin:
            raise ShapeMismatch(
                f"conv expects (N,H,W,{cin}), got {x.shape}")
        n, h, w, _ = x.shape
        s = self.stride
        pt, pb = _pad_amounts(h, kh, s, self.padding)
        pl, pr = _pad_amounts(w, kw, s, self.padding)
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
        oh = conv_output_size(h, kh, s, self.padding)
        ow = conv_output_size(w, kw, s, self.padding)
        patches = np.empty((n, oh, ow, kh, kw, cin), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                patches[:, :, :, i, j, :] = \
                    xp[:, i:i + oh * s:s, j:j + ow * s:s, :]
        y = np.tensordot(patches, self.w, axes=([3, 4, 5], [0, 1, 2]))
        y += self.b
        self._cache = (patches, xp.shape, (pt, pl), x.shape)
        return y.astype(x.dtype, copy=False)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        patches, padded_shape, (pt, pl), x_shape = self._cache
        kh, kw, cin, cout = self.w.shape
        s = self.stride
        n, oh, ow, _ = dy.shape
        self.dw += np.tensordot(patches, dy, axes=([0, 1, 2], [0, 1, 2]))
        self.db += dy.sum(axis=(0, 1, 2))
        dxp = np.zeros(padded_shape, dtype=dy.dtype)
        for i in range(kh):
            for j in range(kw):
                dxp[:, i:i + oh * s:s, j:j + ow * s:s, :] += \
                    np.tensordot(dy, self.w[i, j], axes=([3], [1]))
        _, h, w, _ = x_shape
        return dxp[:, pt:pt + h, pl:pl + w, :]


class ReLU(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, x.dtype.type(0.0))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, dy.dtype.type(0.0))


class MaxPool2D(Layer):
    def __init__(self, kernel: int = 3, stride: int = 2,
                 padding: str = "same"):
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        k, s = self.kernel, self.stride
        n, h, w, c = x.shape
        pt, pb = _pad_amounts(h, k, s, self.padding)
        pl, pr = _pad_amounts(w, k, s, self.padding)
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)),
                    constant_values=-np.inf)
        oh = conv_output_size(h, k, s, self.padding)
        ow = conv_output_size(w, k, s, self.padding)
        windows = np.empty((n, oh, ow, k * k, c), dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                windows[:, :, :, i * k + j, :] = \
                    xp[:, i:i + oh * s:s, j:j + ow * s:s, :]
        best = windows.argmax(axis=3)
        y = np.take_along_axis(windows, best[:, :, :, None, :],
                               axis=3)[:, :, :, 0, :]
        self._cache = (best, xp.shape, (pt, pl), x.shape)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        best, padded_shape, (pt, pl), x_shape = self._cache
        k, s = self.kernel, self.stride
        n, oh, ow, c = dy.shape
        dxp = np.zeros(padded_shape, dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                sel = best == i * k + j
                dxp[:, i:i + oh * s:s, j:j + ow * s:s, :] += \
                    np.where(sel, dy, dy.dtype.type(0.0))
        _, h, w, _ = x_shape
        return dxp[:, pt:pt + h, pl:pl + w, :]


class GlobalAvgPool(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        n, h, w, c = self._shape
        scale = dy.dtype.type(1.0 / (h * w))
        return np.broadcast_to(dy[:, None, None, :] * scale,
                               self._shape).copy()


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int,
                 rng: np.random.Generator | None = None,
                 dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng(0)
        limit = math.sqrt(3.0 / in_features)
        self.w = rng.uniform(-limit, limit,
                             (in_features, out_features)).astype(dtype)
        self.b = rng.uniform(-limit, limit, out_features).astype(dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.w.shape[0]:
            raise ShapeMismatch(
                f"dense expects (N,{self.w.shape[0]}), got {x.shape}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.dw += self._x.T @ dy
        self.db += dy.sum(axis=0)
        return dy @ self.w.T


class Sigmoid(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        # stable in both tails
        out = np.empty_like(x)
        neg = x < 0
        out[~neg] = 1.0 / (1.0 + np.exp(-x[~neg]))
        ez = np.exp(x[neg])
        out[neg] = ez / (1.0 + ez)
        self._y = out
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._y * (1.0 - self._y)
