"""RMSprop with the accumulator outside the square root's epsilon.

cache <- rho * cache + (1 - rho) * g^2
param <- param - lr * g / (sqrt(cache) + eps)

The epsilon sits outside the sqrt; implementations differ on this and it
changes trajectories, so it is pinned here and in the tests.
"""

from __future__ import annotations

import numpy as np


class RMSprop:
    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 rho: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.cache = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray],
             grads: list[np.ndarray]) -> None:
        for p, g, c in zip(params, grads, self.cache):
            c *= p.dtype.type(self.rho)
            c += p.dtype.type(1.0 - self.rho) * g * g
            p -= p.dtype.type(self.lr) * g / (np.sqrt(c)
                                              + p.dtype.type(self.eps))


def rmsprop_step(params, grads, state: RMSprop) -> list[np.ndarray]:
    """Functional wrapper: applies one update in place, returns params."""
    state.step(params, grads)
    return params
