"""Inception-ResNet and Reduction blocks built from the layer primitives.

The residual block runs three same-padded branches (1x1; 1x1-3x3;
1x1-3x3-3x3), each carrying F channels with a ReLU after every
convolution, concatenates to 3F, projects linearly back to the input
width, scales, adds the input, and applies a final ReLU. The reduction
block halves the spatial extent by concatenating a stride-2 conv with a
stride-2 max pool.
"""

from __future__ import annotations

import numpy as np

from .layers import Conv2D, Layer, MaxPool2D, ReLU, ShapeMismatch


class InceptionResnetBlock(Layer):
    def __init__(self, channels: int, filters: int,
                 residual_scale: float = 1.0,
                 rng: np.random.Generator | None = None,
                 dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.channels = channels
        self.residual_scale = residual_scale

        def conv(cin, cout, k):
            return Conv2D(cin, cout, k, stride=1, padding="same", rng=rng,
                          dtype=dtype)

        self.branch1 = [conv(channels, filters, 1), ReLU()]
        self.branch2 = [conv(channels, filters, 1), ReLU(),
                        conv(filters, filters, 3), ReLU()]
        self.branch3 = [conv(channels, filters, 1), ReLU(),
                        conv(filters, filters, 3), ReLU(),
                        conv(filters, filters, 3), ReLU()]
        self.project = conv(3 * filters, channels, 1)
        self.out_relu = ReLU()

    def _layers(self):
        yield from self.branch1
        yield from self.branch2
        yield from self.branch3
        yield self.project
        yield self.out_relu

    def params(self):
        return [p for layer in self._layers() for p in layer.params()]

    def grads(self):
        return [g for layer in self._layers() for g in layer.grads()]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[3] != self.channels:
            raise ShapeMismatch(
                f"block built for {self.channels} channels, got {x.shape}")
        outs = []
        for branch in (self.branch1, self.branch2, self.branch3):
            h = x
            for layer in branch:
                h = layer.forward(h)
            outs.append(h)
        concat = np.concatenate(outs, axis=3)
        proj = self.project.forward(concat)
        scale = x.dtype.type(self.residual_scale)
        return self.out_relu.forward(x + scale * proj)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dsum = self.out_relu.backward(dy)
        dproj = dsum * dy.dtype.type(self.residual_scale)
        dconcat = self.project.backward(dproj)
        f = dconcat.shape[3] // 3
        dx = dsum.copy()
        for k, branch in enumerate((self.branch1, self.branch2,
                                    self.branch3)):
            dh = dconcat[:, :, :, k * f:(k + 1) * f]
            for layer in reversed(branch):
                dh = layer.backward(dh)
            dx += dh
        return dx


class ReductionBlock(Layer):
    def __init__(self, channels: int, filters: int,
                 rng: np.random.Generator | None = None,
                 dtype=np.float32):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.channels = channels
        self.filters = filters
        self.conv = Conv2D(channels, filters, 3, stride=2, padding="same",
                           rng=rng, dtype=dtype)
        self.relu = ReLU()
        self.pool = MaxPool2D(kernel=3, stride=2, padding="same")

    def params(self):
        return self.conv.params()

    def grads(self):
        return self.conv.grads()

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[3] != self.channels:
            raise ShapeMismatch(
                f"block built for {self.channels} channels, got {x.shape}")
        a = self.relu.forward(self.conv.forward(x))
        b = self.pool.forward(x)
        return np.concatenate([a, b], axis=3)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        f = self.filters
        da = self.conv.backward(self.relu.backward(dy[:, :, :, :f]))
        db = self.pool.backward(dy[:, :, :, f:])
        return da + db
