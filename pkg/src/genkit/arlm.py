"""Autoregressive factorization: teacher-forced NLL with position masking,
token-by-token sampling, voice-conversion sequence assembly, and duration
reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import groupby
from typing import Optional

import numpy as np

from .errors import InvalidModelError
from .predictors import CategoricalPredictor, validate_rows
from .tokens import MaskState, SpecialIds, TokenSequence, unmasked


@dataclass(frozen=True)
class ArInput:
    """A conditioning prefix plus the index where scored targets begin."""

    prefix: TokenSequence
    target_start: int
    specials: SpecialIds

    def __post_init__(self):
        if self.target_start != len(self.prefix):
            raise ValueError("target region must start immediately after the prefix")

    def loss_mask(self, total_length: int) -> np.ndarray:
        """False over the prefix, True from target_start onward."""
        if total_length < self.target_start:
            raise ValueError("total_length shorter than the prefix")
        mask = np.zeros(total_length, dtype=bool)
        mask[self.target_start:] = True
        return mask


@dataclass(frozen=True)
class VevoAssembly:
    """[sos] content [sep] g [sep] style, with the loss region covering the
    final [sep]+style positions whose next-token targets are style + [eos].

    ``eval_tokens`` appends the eos so the targets can be scored in place:
    ``loss_mask`` is True exactly at the style ids and the final eos.
    """

    tokens: TokenSequence
    eval_tokens: TokenSequence
    loss_mask: np.ndarray
    specials: SpecialIds

    @property
    def targets(self) -> tuple:
        ids = self.eval_tokens.ids
        return tuple(ids[i] for i in np.nonzero(self.loss_mask)[0])


def ar_nll(pred: CategoricalPredictor, seq: TokenSequence, loss_mask) -> float:
    """Sum over masked-in positions of -log p(y_i | y_<i); the predictor is
    queried once on the unmasked sequence (teacher forcing) and must be
    causal for the result to mean anything."""
    loss_mask = np.asarray(loss_mask, dtype=bool)
    if loss_mask.shape != (len(seq),):
        raise ValueError("loss_mask length must equal sequence length")
    rows = validate_rows(pred.predict(unmasked(seq)), len(seq), pred.num_classes)
    total = 0.0
    for i in np.nonzero(loss_mask)[0]:
        y = seq.ids[i]
        if not (0 <= y < pred.num_classes):
            raise InvalidModelError(f"target id {y} outside predictor classes")
        p = rows[i, y]
        if p <= 0.0:
            return math.inf
        total -= math.log(p)
    return total


def ar_sample(pred: CategoricalPredictor, prefix: TokenSequence, max_len: int,
              eos: int, mode: str = "argmax", seed: Optional[int] = None,
              temperature: float = 1.0) -> TokenSequence:
    """Append tokens one at a time until eos or max_len new tokens.

    Each round queries the predictor on the current sequence extended by a
    single masked slot and reads that slot's row. The prefix is never
    modified.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if mode not in ("argmax", "sample"):
        raise ValueError(f"unknown mode: {mode!r}")
    if mode == "sample" and seed is None:
        raise ValueError("sample mode requires a seed")
    rng = np.random.default_rng(seed) if mode == "sample" else None

    generated = list(prefix.ids)
    for _ in range(max_len):
        probe = prefix.replace_ids(generated + [prefix.mask_id])
        mask = np.zeros(len(probe), dtype=bool)
        mask[-1] = True
        rows = validate_rows(pred.predict(MaskState(probe, mask)),
                             len(probe), pred.num_classes)
        row = rows[-1]
        if mode == "argmax":
            tok = int(row.argmax())
        else:
            powered = row ** (1.0 / temperature)
            powered /= powered.sum()
            tok = int((rng.random() > powered.cumsum()).sum())
        generated.append(tok)
        if tok == eos:
            break
    return prefix.replace_ids(generated)


def vevo_assemble(content: TokenSequence, aux: TokenSequence,
                  style: TokenSequence) -> VevoAssembly:
    """Assemble the voice-conversion training sequence and its loss region.

    ``aux`` is the opaque middle segment between the two separators; its
    contents are entirely caller-defined.
    """
    if not (content.vocab_size == aux.vocab_size == style.vocab_size):
        raise ValueError("inputs must share vocabulary metadata")
    sp = SpecialIds.for_vocab(content.vocab_size)
    ids = (sp.sos,) + content.ids + (sp.sep,) + aux.ids + (sp.sep,) + style.ids
    tokens = content.replace_ids(ids)
    eval_tokens = content.replace_ids(ids + (sp.eos,))
    mask = np.zeros(len(eval_tokens), dtype=bool)
    style_start = len(ids) - len(style.ids)
    mask[style_start:] = True
    return VevoAssembly(tokens=tokens, eval_tokens=eval_tokens,
                        loss_mask=mask, specials=sp)


def duration_reduce(x: TokenSequence) -> TokenSequence:
    """Collapse maximal runs of equal ids to single ids, order preserved."""
    return x.replace_ids([k for k, _ in groupby(x.ids)])


def debatts_assemble(opponent: TokenSequence, text: TokenSequence,
                     speaker_prompt: TokenSequence) -> ArInput:
    """Concatenate opponent tokens, text, and speaker prompt into the
    conditioning prefix; the scored target region starts right after it."""
    prefix = opponent.concat(text).concat(speaker_prompt)
    return ArInput(prefix=prefix, target_start=len(prefix),
                   specials=SpecialIds.for_vocab(prefix.vocab_size))
