"""Flow matching: the optimal-transport conditional path, its target vector
field, the regression losses, and fixed-grid ODE integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .errors import DivergenceError, InvalidModelError
from .mlp import TinyMlp
from .trajectory import Snapshot, Trajectory, new_trajectory_id


class VectorField(Protocol):
    def __call__(self, x: np.ndarray, t: float, cond=None) -> np.ndarray:
        ...


@dataclass(frozen=True)
class OtCfmParams:
    sigma: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.sigma < 1.0):
            raise ValueError(f"sigma must lie in [0, 1), got {self.sigma}")


def _pair(x0, x1):
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    if x0.shape != x1.shape:
        raise ValueError(f"shape mismatch: {x0.shape} vs {x1.shape}")
    return x0, x1


def ot_flow(x0, x1, t: float, p: OtCfmParams) -> np.ndarray:
    """Interpolant (1 - (1 - sigma) t) x0 + t x1 along the transport path."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t={t} outside [0, 1]")
    x0, x1 = _pair(x0, x1)
    return (1.0 - (1.0 - p.sigma) * t) * x0 + t * x1


def ot_target_field(x0, x1, p: OtCfmParams) -> np.ndarray:
    """Regression target x1 - (1 - sigma) x0; constant in t."""
    x0, x1 = _pair(x0, x1)
    return x1 - (1.0 - p.sigma) * x0


def cfm_loss(field: VectorField, x0, x1, t: float, p: OtCfmParams,
             norm: str = "l2", reduction: str = "mean", cond=None) -> float:
    """Distance between the field at the interpolant and the target field.

    ``l2`` is the squared norm (sum of squares). ``l1`` is stated without a
    reduction in its source form, so both are exposed; mean is the default.
    """
    x0, x1 = _pair(x0, x1)
    probe = ot_flow(x0, x1, t, p)
    v = np.asarray(field(probe, t, cond), dtype=np.float64)
    if v.shape != x0.shape:
        raise InvalidModelError(f"field returned shape {v.shape}, expected {x0.shape}")
    diff = v - ot_target_field(x0, x1, p)
    if norm == "l2":
        return float(np.sum(diff * diff))
    if norm == "l1":
        if reduction == "mean":
            return float(np.mean(np.abs(diff)))
        if reduction == "sum":
            return float(np.sum(np.abs(diff)))
        raise ValueError(f"unknown reduction: {reduction!r}")
    raise ValueError(f"unknown norm: {norm!r}")


def integrate(field: VectorField, x_init, steps: int, method: str = "euler",
              cond=None, trajectory_id: Optional[str] = None):
    """Integrate dx/dt = field(x, t) from t=0 to t=1 on a uniform grid.

    Euler is exact for constant fields, which is what makes the transport
    path reproducible to float precision. Records all steps+1 states.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if method not in ("euler", "midpoint"):
        raise ValueError(f"unknown method: {method!r}")
    x = np.array(x_init, dtype=np.float64, copy=True)
    dt = 1.0 / steps
    traj = Trajectory(
        id=trajectory_id or new_trajectory_id("flow"),
        kind="flow",
        steps=[Snapshot(step=0, state=x.copy())],
        condition={"method": method, "steps": str(steps)},
        seed=None,
    )

    def eval_field(state, t):
        v = np.asarray(field(state, t, cond), dtype=np.float64)
        if v.shape != x.shape:
            raise InvalidModelError(f"field returned shape {v.shape}, expected {x.shape}")
        return v

    for k in range(steps):
        t = k * dt
        with np.errstate(over="ignore", invalid="ignore"):
            if method == "euler":
                x = x + eval_field(x, t) * dt
            else:
                half = x + 0.5 * dt * eval_field(x, t)
                x = x + eval_field(half, t + 0.5 * dt) * dt
        if not np.all(np.isfinite(x)):
            raise DivergenceError(k + 1)
        traj.steps.append(Snapshot(step=k + 1, state=x.copy()))
    return x, traj


class ConstantField:
    """v(x, t) = c; the exact conditional field of the transport path."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)

    def __call__(self, x, t, cond=None):
        return self.value


class MlpVectorField:
    """Tiny differentiable vector field for the gradient checks."""

    def __init__(self, dim: int, hidden_dim: int = 8, seed: int = 0):
        self.dim = dim
        self.net = TinyMlp(dim + 1, hidden_dim, dim, seed=seed)

    def _features(self, x, t):
        return np.concatenate([np.asarray(x, dtype=np.float64).ravel(), [float(t)]])

    def __call__(self, x, t, cond=None):
        return self.net.forward(self._features(x, t))

    def value_and_cache(self, x, t):
        return self.net.forward_with_cache(self._features(x, t))

    def param_grad(self, cache, dy):
        return self.net.param_grad(cache, dy)

    def get_params(self):
        return self.net.get_params()

    def set_params(self, theta):
        self.net.set_params(theta)
