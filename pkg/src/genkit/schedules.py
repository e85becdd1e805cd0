"""Scalar schedule functions shared by masked decoding and diffusion.

All schedules are immutable after construction and safe for concurrent
reads. Scalar trig goes through ``math`` (not numpy) so that independent
re-implementations of the decoding recipe see bit-identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MASK_SCHEDULE_KINDS = ("cosine", "linear")


@dataclass(frozen=True)
class MaskSchedule:
    """Masking fraction as a function of continuous time on [0, horizon].

    ``cosine`` uses sin(pi*t / (2*horizon)); ``linear`` uses t/horizon.
    Both reach exactly 1 at t = horizon.
    """

    kind: str = "cosine"
    horizon: float = 1.0

    def __post_init__(self):
        if self.kind not in MASK_SCHEDULE_KINDS:
            raise ValueError(f"unknown mask schedule kind: {self.kind!r}")
        if not (self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")


def gamma(sched: MaskSchedule, t: float) -> float:
    """Masked fraction at time t in [0, horizon]."""
    T = sched.horizon
    if not (0.0 <= t <= T):
        raise ValueError(f"t={t} outside [0, {T}]")
    if sched.kind == "cosine":
        return math.sin(math.pi * t / (2.0 * T))
    return t / T


@dataclass(frozen=True)
class NoiseSchedule:
    """Discrete diffusion noise schedule beta_1 <= ... <= beta_N in (0, 1).

    Non-decreasing rather than strictly increasing: flat stretches change
    nothing downstream (every beta > 0 already makes the cumulative signal
    level strictly decreasing). ``alpha_bars[n]`` holds the product
    prod_{s<=n}(1 - beta_s) with the empty product alpha_bars[0] = 1.
    """

    betas: np.ndarray
    alpha_bars: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size == 0:
            raise ValueError("betas must be a non-empty 1-D vector")
        if not (np.all(betas > 0.0) and np.all(betas < 1.0)):
            raise ValueError("betas must lie strictly inside (0, 1)")
        if betas.size > 1 and not np.all(np.diff(betas) >= 0.0):
            raise ValueError("betas must be non-decreasing")
        object.__setattr__(self, "betas", betas)
        bars = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
        object.__setattr__(self, "alpha_bars", bars)

    @property
    def num_steps(self) -> int:
        return int(self.betas.size)


def linear_noise_schedule(beta_start: float, beta_end: float, n: int) -> NoiseSchedule:
    """Evenly spaced betas from beta_start to beta_end, the usual DDPM default."""
    if n < 1:
        raise ValueError("need at least one step")
    if n == 1:
        return NoiseSchedule(np.array([beta_start], dtype=np.float64))
    return NoiseSchedule(np.linspace(beta_start, beta_end, n, dtype=np.float64))


def alpha_bar(sched: NoiseSchedule, n: int) -> float:
    """Cumulative signal level prod_{s=1}^{n}(1 - beta_s); n = 0 gives 1."""
    if not (0 <= n <= sched.num_steps):
        raise ValueError(f"step n={n} outside [0, {sched.num_steps}]")
    return float(sched.alpha_bars[n])


@dataclass(frozen=True)
class LayerSchedule:
    """Sampling distribution over quantizer layers 1..N."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if np.any(probs < 0.0):
            raise ValueError("probs must be non-negative")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValueError("probs must sum to 1 within 1e-12")
        object.__setattr__(self, "probs", probs)

    @property
    def num_layers(self) -> int:
        return int(self.probs.size)


def layer_schedule(num_layers: int) -> LayerSchedule:
    """Linearly decaying layer-sampling distribution.

    Raw weights w_j = 1 - 2j/(N(N+1)) for j = 1..N sum to N-1, not 1, so
    they are normalized. N = 1 is the degenerate case: the sole raw weight
    is 0 and the distribution is forced to [1.0].
    """
    if num_layers < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    if num_layers == 1:
        return LayerSchedule(np.array([1.0]))
    j = np.arange(1, num_layers + 1, dtype=np.float64)
    weights = 1.0 - 2.0 * j / (num_layers * (num_layers + 1))
    return LayerSchedule(weights / weights.sum())


def sample_layer(sched: LayerSchedule, rng: np.random.Generator) -> int:
    """Draw a 1-based layer index from the schedule."""
    return int(rng.choice(sched.num_layers, p=sched.probs)) + 1
