"""A tiny one-hidden-layer MLP with hand-rolled backprop.

This is the differentiable test substrate for the loss functions: big
frameworks are overkill for parameter vectors of a few hundred float64
entries, and the finite-difference oracle in the test suite validates the
gradients independently.
"""

from __future__ import annotations

import numpy as np


class TinyMlp:
    """y = W2 @ tanh(W1 @ x + b1) + b2 with float64 parameters."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.out_dim = out_dim
        scale1 = 1.0 / np.sqrt(max(in_dim, 1))
        scale2 = 1.0 / np.sqrt(hidden_dim)
        self.w1 = rng.normal(0.0, scale1, size=(hidden_dim, in_dim))
        self.b1 = rng.normal(0.0, 0.1, size=hidden_dim)
        self.w2 = rng.normal(0.0, scale2, size=(out_dim, hidden_dim))
        self.b2 = rng.normal(0.0, 0.1, size=out_dim)

    @property
    def num_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def get_params(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def set_params(self, theta: np.ndarray) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {theta.shape}")
        i = 0
        for attr in ("w1", "b1", "w2", "b2"):
            arr = getattr(self, attr)
            setattr(self, attr, theta[i : i + arr.size].reshape(arr.shape))
            i += arr.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        h = np.tanh(self.w1 @ x + self.b1)
        return self.w2 @ h + self.b2

    def forward_with_cache(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        h = np.tanh(self.w1 @ x + self.b1)
        y = self.w2 @ h + self.b2
        return y, (x, h)

    def param_grad(self, cache, dy: np.ndarray) -> np.ndarray:
        """Gradient of a scalar loss wrt the flat parameter vector, given
        dLoss/dy and the forward cache."""
        x, h = cache
        dy = np.asarray(dy, dtype=np.float64)
        dw2 = np.outer(dy, h)
        db2 = dy
        dh = self.w2.T @ dy
        dpre = dh * (1.0 - h * h)
        dw1 = np.outer(dpre, x)
        db1 = dpre
        return np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2])
