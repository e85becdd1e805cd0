"""Conditional categorical predictors over token positions.

A predictor maps a masked token state (plus optional condition) to one
probability row per position. Two implementations:

* ``TablePredictor`` returns stored rows, optionally switching on the
  condition; it is the workhorse for oracle tests and the CLI.
* ``MlpCategoricalPredictor`` is a tiny differentiable model used by the
  gradient checks.
"""

from __future__ import annotations

import json
from typing import Optional, Protocol

import numpy as np

from .errors import InvalidModelError
from .mlp import TinyMlp
from .tokens import MaskState

ROW_SUM_TOL = 1e-9


class CategoricalPredictor(Protocol):
    num_classes: int

    def predict(self, state: MaskState, condition=None) -> np.ndarray:
        """Return an (n, num_classes) matrix of per-position probabilities."""
        ...


def validate_rows(rows: np.ndarray, length: int, num_classes: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape != (length, num_classes):
        raise InvalidModelError(
            f"predictor returned shape {rows.shape}, expected {(length, num_classes)}"
        )
    if not np.all(np.isfinite(rows)) or np.any(rows < 0.0):
        raise InvalidModelError("predictor rows must be finite and non-negative")
    if np.any(np.abs(rows.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise InvalidModelError("predictor rows must sum to 1")
    return rows


def condition_key(condition) -> str:
    """Canonical string form of a condition for table lookups."""
    if condition is None:
        return ""
    if isinstance(condition, np.ndarray):
        return ";".join(",".join(repr(float(v)) for v in row) for row in np.atleast_2d(condition))
    return ",".join(str(int(c)) for c in condition)


class TablePredictor:
    """Rows looked up by position, optionally switched on the condition.

    ``rows``: (m, V) matrix; position i uses row i % m, so a single row
    broadcasts to any length. ``contexts`` maps a condition key (see
    ``condition_key``) to an alternative rows matrix.
    """

    def __init__(self, rows, num_classes: Optional[int] = None, contexts: Optional[dict] = None):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        self.num_classes = int(num_classes if num_classes is not None else rows.shape[1])
        if rows.shape[1] != self.num_classes:
            raise InvalidModelError("row width does not match num_classes")
        self.rows = rows
        self.contexts = {}
        if contexts:
            for key, table in contexts.items():
                table = np.atleast_2d(np.asarray(table, dtype=np.float64))
                if table.shape[1] != self.num_classes:
                    raise InvalidModelError(f"context {key!r} row width mismatch")
                self.contexts[str(key)] = table

    def predict(self, state: MaskState, condition=None) -> np.ndarray:
        table = self.rows
        if self.contexts:
            table = self.contexts.get(condition_key(condition), self.rows)
        n = len(state)
        idx = np.arange(n) % table.shape[0]
        return validate_rows(table[idx], n, self.num_classes)

    @classmethod
    def from_json(cls, path) -> "TablePredictor":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(doc["rows"], doc.get("num_classes"), doc.get("contexts"))

    def to_json(self, path) -> None:
        doc = {"num_classes": self.num_classes, "rows": self.rows.tolist()}
        if self.contexts:
            doc["contexts"] = {k: v.tolist() for k, v in self.contexts.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)


class MlpCategoricalPredictor:
    """Differentiable predictor: one-hot features -> MLP -> per-position softmax.

    The input features concatenate, per position, a one-hot over payload ids
    plus a mask flag, followed by an optional fixed-width condition vector.
    Sequence length is fixed at construction.
    """

    def __init__(self, length: int, num_classes: int, hidden_dim: int = 8,
                 cond_dim: int = 0, seed: int = 0):
        self.length = length
        self.num_classes = num_classes
        self.cond_dim = cond_dim
        in_dim = length * (num_classes + 1) + cond_dim
        self.net = TinyMlp(in_dim, hidden_dim, length * num_classes, seed=seed)

    def _features(self, state: MaskState, condition) -> np.ndarray:
        if len(state) != self.length:
            raise InvalidModelError(f"predictor built for length {self.length}, got {len(state)}")
        feats = np.zeros((self.length, self.num_classes + 1))
        ids = state.materialize()
        for i, tok in enumerate(ids):
            if tok == state.base.mask_id:
                feats[i, self.num_classes] = 1.0
            else:
                feats[i, int(tok)] = 1.0
        flat = feats.ravel()
        if self.cond_dim:
            cond = np.zeros(self.cond_dim) if condition is None else np.asarray(condition, dtype=np.float64).ravel()
            if cond.size != self.cond_dim:
                raise InvalidModelError("condition width mismatch")
            flat = np.concatenate([flat, cond])
        return flat

    def _softmax_rows(self, logits: np.ndarray) -> np.ndarray:
        z = logits.reshape(self.length, self.num_classes)
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, state: MaskState, condition=None) -> np.ndarray:
        logits = self.net.forward(self._features(state, condition))
        return validate_rows(self._softmax_rows(logits), len(state), self.num_classes)

    def masked_nll_grad(self, state: MaskState, condition, targets, mask) -> np.ndarray:
        """Analytic d/dtheta of sum_i mask_i * (-log p_i[target_i]).

        The value itself comes from the public loss functions; this supplies
        only the gradient so finite differences stay an independent check.
        """
        x = self._features(state, condition)
        logits, cache = self.net.forward_with_cache(x)
        probs = self._softmax_rows(logits)
        dlogits = np.zeros_like(probs)
        mask = np.asarray(mask, dtype=bool)
        for i in np.nonzero(mask)[0]:
            dlogits[i] = probs[i]
            dlogits[i, int(targets[i])] -= 1.0
        return self.net.param_grad(cache, dlogits.ravel())

    def get_params(self) -> np.ndarray:
        return self.net.get_params()

    def set_params(self, theta: np.ndarray) -> None:
        self.net.set_params(theta)
