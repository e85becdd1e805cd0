"""Discrete token sequences and masked views of them.

A TokenSequence carries payload ids in [0, vocab_size) plus a reserved
mask sentinel (vocab_size by default). Special ids for autoregressive
assembly (sos/sep/eos) live above the mask id, see ``SpecialIds``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TokenSequence:
    """Immutable id vector with vocabulary metadata.

    Zero-length sequences are allowed: assembly and run-collapse operations
    need them as identities. Decoding targets must be non-empty, which the
    decode entry points enforce themselves.
    """

    ids: tuple
    vocab_size: int
    mask_id: int = -1  # resolved to vocab_size in __post_init__ when negative

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        if self.mask_id < 0:
            object.__setattr__(self, "mask_id", self.vocab_size)
        if 0 <= self.mask_id < self.vocab_size:
            raise ValueError("mask_id must lie outside the payload range")
        for pos, i in enumerate(ids):
            if i != self.mask_id and not (0 <= i < self.vocab_size) and not self._is_special(i):
                raise ValueError(f"id {i} at position {pos} outside vocabulary")

    def _is_special(self, i: int) -> bool:
        # sos/sep/eos conventionally occupy vocab_size+1 .. vocab_size+3
        return self.vocab_size < i <= self.vocab_size + 3

    def __len__(self) -> int:
        return len(self.ids)

    def array(self) -> np.ndarray:
        return np.asarray(self.ids, dtype=np.int64)

    def replace_ids(self, ids) -> "TokenSequence":
        return TokenSequence(tuple(int(i) for i in ids), self.vocab_size, self.mask_id)

    def concat(self, other: "TokenSequence") -> "TokenSequence":
        if other.vocab_size != self.vocab_size or other.mask_id != self.mask_id:
            raise ValueError("cannot concatenate sequences with different vocabularies")
        return self.replace_ids(self.ids + other.ids)


@dataclass(frozen=True)
class SpecialIds:
    """Reserved structural ids for autoregressive sequence assembly."""

    sos: int
    sep: int
    eos: int

    @classmethod
    def for_vocab(cls, vocab_size: int) -> "SpecialIds":
        # mask sentinel sits at vocab_size; specials follow it
        return cls(sos=vocab_size + 1, sep=vocab_size + 2, eos=vocab_size + 3)


@dataclass(frozen=True)
class MaskState:
    """A TokenSequence plus a boolean mask; masked positions read as mask_id."""

    base: TokenSequence
    mask: np.ndarray = field(compare=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (len(self.base),):
            raise ValueError("mask length must equal sequence length")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    def __len__(self) -> int:
        return len(self.base)

    def materialize(self) -> np.ndarray:
        """Ids with mask_id substituted at masked positions."""
        out = self.base.array()
        out[self.mask] = self.base.mask_id
        return out

    @property
    def num_masked(self) -> int:
        return int(self.mask.sum())


def fully_masked(length: int, vocab_size: int, mask_id: int = -1) -> MaskState:
    if length < 1:
        raise ValueError("length must be >= 1")
    resolved = vocab_size if mask_id < 0 else mask_id
    seq = TokenSequence((resolved,) * length, vocab_size, resolved)
    return MaskState(seq, np.ones(length, dtype=bool))


def unmasked(seq: TokenSequence) -> MaskState:
    return MaskState(seq, np.zeros(len(seq), dtype=bool))
