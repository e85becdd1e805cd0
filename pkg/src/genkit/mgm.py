"""Masked generative modeling: Bernoulli masking, the masked cross-entropy
loss, and iterative parallel decoding with confidence remasking.

The decoder starts from a fully masked sequence and runs S rounds. Each
round predicts all positions, keeps committed tokens, then remasks the
floor(n * gamma(T - j*T/S)) lowest-confidence tokens. Committed positions
carry confidence exactly 1 so they are only ever remasked after every
masked position ties at probability 1, which cannot happen for predictors
with rows strictly inside the simplex. Ties break lowest index first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import InvalidModelError
from .predictors import CategoricalPredictor, validate_rows
from .schedules import MaskSchedule, gamma
from .tokens import MaskState, TokenSequence, fully_masked
from .trajectory import Snapshot, Trajectory, new_trajectory_id

SELECTION_MODES = ("argmax", "sample")


@dataclass(frozen=True)
class DecodeConfig:
    """Knobs of the iterative decoder.

    ``selection`` picks how candidate tokens are drawn from each row; the
    seeded ``sample`` mode uses ``temperature`` as a constant exponent
    (rows ** (1/temperature), renormalized).
    """

    steps: int
    schedule: MaskSchedule
    selection: str = "argmax"
    seed: Optional[int] = None
    temperature: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.selection not in SELECTION_MODES:
            raise ValueError(f"unknown selection mode: {self.selection!r}")
        if self.selection == "sample" and self.seed is None:
            raise ValueError("sample selection requires a seed")
        if not (self.temperature > 0):
            raise ValueError("temperature must be positive")


def apply_mask(x: TokenSequence, t: float, schedule: MaskSchedule, seed: int) -> MaskState:
    """Mask each position independently with probability gamma(t)."""
    T = schedule.horizon
    if not (0.0 < t <= T):
        raise ValueError(f"t={t} outside (0, {T}]")
    rate = gamma(schedule, t)
    rng = np.random.default_rng(seed)
    mask = rng.random(len(x)) < rate
    return MaskState(x, mask)


def mask_loss(pred: CategoricalPredictor, state: MaskState, condition=None) -> float:
    """Sum over masked positions of -log p(true token | masked state).

    Returns +inf when the predictor puts zero mass on a true token at a
    masked position.
    """
    rows = validate_rows(pred.predict(state, condition), len(state), pred.num_classes)
    total = 0.0
    for i in np.nonzero(state.mask)[0]:
        truth = state.base.ids[i]
        if not (0 <= truth < pred.num_classes):
            raise InvalidModelError(f"true id {truth} outside predictor classes")
        p = rows[i, truth]
        if p <= 0.0:
            return math.inf
        total -= math.log(p)
    return total


def _select(rows: np.ndarray, mode: str, temperature: float,
            rng: Optional[np.random.Generator]) -> np.ndarray:
    if mode == "argmax":
        return rows.argmax(axis=1)
    powered = rows ** (1.0 / temperature)
    powered /= powered.sum(axis=1, keepdims=True)
    cdf = powered.cumsum(axis=1)
    u = rng.random((rows.shape[0], 1))
    return (u > cdf).sum(axis=1)


def decode(pred: CategoricalPredictor, length: int, condition=None,
           cfg: DecodeConfig = None, trajectory_id: Optional[str] = None):
    """Iterative parallel decoding from a fully masked sequence.

    Returns the final TokenSequence and a Trajectory holding the initial
    state plus one snapshot per round (state after remasking, with the mask
    bitmap and the confidence vector of that round).
    """
    if cfg is None:
        raise ValueError("cfg is required")
    if length < 1:
        raise ValueError("length must be >= 1")
    vocab = pred.num_classes
    state = fully_masked(length, vocab)
    mask_id = state.base.mask_id
    sched = cfg.schedule
    T, S = sched.horizon, cfg.steps
    rng = np.random.default_rng(cfg.seed) if cfg.selection == "sample" else None

    traj = Trajectory(
        id=trajectory_id or new_trajectory_id("mgm"),
        kind="mgm",
        steps=[Snapshot(step=0, state=state.materialize(), mask=state.mask.copy())],
        condition={"vocab_size": str(vocab), "length": str(length)},
        seed=cfg.seed,
    )

    ids = state.materialize()
    mask = state.mask.copy()
    for j in range(1, S + 1):
        cur = MaskState(state.base.replace_ids(ids), mask)
        rows = validate_rows(pred.predict(cur, condition), length, vocab)
        chosen = _select(rows, cfg.selection, cfg.temperature, rng)
        candidate = np.where(mask, chosen, ids)
        confidence = np.where(mask, rows[np.arange(length), chosen], 1.0)

        remask_count = math.floor(length * gamma(sched, T - j * T / S))
        order = sorted(range(length), key=lambda i: (confidence[i], i))
        to_mask = np.zeros(length, dtype=bool)
        for i in order[:remask_count]:
            to_mask[i] = True

        ids = np.where(to_mask, mask_id, candidate)
        mask = to_mask
        traj.steps.append(Snapshot(step=j, state=ids.copy(), mask=mask.copy(),
                                   confidence=confidence.astype(np.float64)))

    assert not mask.any(), "decode must terminate with zero masked positions"
    return TokenSequence(tuple(int(i) for i in ids), vocab), traj


def s2a_condition_sum(semantic_emb: np.ndarray, acoustic_embs: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise sum of a semantic embedding with per-layer acoustic embeddings."""
    out = np.array(semantic_emb, dtype=np.float64, copy=True)
    for emb in acoustic_embs:
        emb = np.asarray(emb, dtype=np.float64)
        if emb.shape != out.shape:
            raise ValueError(f"embedding shape {emb.shape} != {out.shape}")
        out += emb
    return out


def s2a_layer_decode(preds: Sequence[CategoricalPredictor], length: int, cfg: DecodeConfig,
                     semantic_emb: Optional[np.ndarray] = None,
                     embedders: Optional[Sequence] = None):
    """Coarse-to-fine decoding: one full decode per layer, each conditioned
    on the layers already produced.

    When ``semantic_emb`` and per-layer ``embedders`` (token ids -> embedding
    matrix) are supplied, layer j receives the summed embedding of the
    semantic stream and layers 1..j-1 as its condition; otherwise the raw
    ids of previous layers are concatenated and passed through.
    """
    outputs: List[TokenSequence] = []
    trajectories: List[Trajectory] = []
    for j, pred in enumerate(preds):
        if embedders is not None and semantic_emb is not None:
            cond = s2a_condition_sum(semantic_emb, [embedders[l](outputs[l]) for l in range(j)])
        else:
            cond = tuple(i for seq in outputs for i in seq.ids)
        seq, traj = decode(pred, length, cond, cfg)
        outputs.append(seq)
        trajectories.append(traj)
    return outputs, trajectories
