"""Noise-agnostic contrastive speaker loss, the combined objective, and the
shared finite-difference gradient checker.

The contrastive loss follows the supervised-contrastive reading of a
multi-positive cross-entropy: similarities are raw dot products scaled by
1/tau, self-pairs are excluded from both numerator and normalization, each
row averages -log softmax over its positive columns, and rows without
positives contribute zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np


@dataclass(frozen=True)
class ReferenceBatch:
    """Pooled clean/noisy reference embeddings with speaker labels.

    ``clean`` and ``noisy`` are (N, d); row i of each comes from the same
    speaker ``speaker_labels[i]``.
    """

    clean: np.ndarray
    noisy: np.ndarray
    speaker_labels: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        clean = np.atleast_2d(np.asarray(self.clean, dtype=np.float64))
        noisy = np.atleast_2d(np.asarray(self.noisy, dtype=np.float64))
        labels = np.asarray(self.speaker_labels, dtype=np.int64)
        if clean.shape != noisy.shape:
            raise ValueError("clean and noisy must have matching shapes")
        if labels.shape != (clean.shape[0],):
            raise ValueError("one speaker label per row is required")
        if not (self.temperature > 0):
            raise ValueError("temperature must be positive")
        object.__setattr__(self, "clean", clean)
        object.__setattr__(self, "noisy", noisy)
        object.__setattr__(self, "speaker_labels", labels)


def pool_reference(h: np.ndarray) -> np.ndarray:
    """Average pooling over the length dimension of an (m, d) hidden sequence."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    if h.shape[0] < 1:
        raise ValueError("cannot pool an empty sequence")
    return h.mean(axis=0)


def _contrastive_parts(batch: ReferenceBatch, normalize: bool):
    h = np.vstack([batch.clean, batch.noisy])
    if normalize:
        h = h / np.linalg.norm(h, axis=1, keepdims=True)
    y = np.concatenate([batch.speaker_labels, batch.speaker_labels])
    m = h.shape[0]
    logits = (h @ h.T) / batch.temperature
    same = y[:, None] == y[None, :]
    off_diag = ~np.eye(m, dtype=bool)
    positives = same & off_diag
    return h, logits, positives, off_diag


def contrastive_speaker_loss(batch: ReferenceBatch, normalize: bool = False) -> float:
    """Mean over all 2N rows of the multi-positive contrastive objective."""
    _, logits, positives, off_diag = _contrastive_parts(batch, normalize)
    m = logits.shape[0]
    total = 0.0
    for i in range(m):
        pos = np.nonzero(positives[i])[0]
        if pos.size == 0:
            continue
        cand = np.nonzero(off_diag[i])[0]
        row = logits[i, cand]
        row = row - row.max()
        log_z = np.log(np.exp(row).sum())
        log_soft = {j: row[a] - log_z for a, j in enumerate(cand)}
        total += -np.mean([log_soft[j] for j in pos])
    return total / m


def contrastive_speaker_loss_grad(batch: ReferenceBatch) -> Tuple[float, np.ndarray, np.ndarray]:
    """Loss plus analytic gradients wrt the clean and noisy embeddings.

    Only the raw-dot-product form is differentiated; finite differences in
    the test suite verify it independently.
    """
    h, logits, positives, off_diag = _contrastive_parts(batch, normalize=False)
    m, _ = h.shape
    n = m // 2
    tau = batch.temperature
    loss = 0.0
    g_logits = np.zeros_like(logits)
    for i in range(m):
        pos = np.nonzero(positives[i])[0]
        if pos.size == 0:
            continue
        cand = np.nonzero(off_diag[i])[0]
        row = logits[i, cand]
        shifted = row - row.max()
        expd = np.exp(shifted)
        soft = expd / expd.sum()
        log_soft = shifted - np.log(expd.sum())
        idx_of = {j: a for a, j in enumerate(cand)}
        loss += -np.mean([log_soft[idx_of[j]] for j in pos])
        # d(-mean log softmax over positives)/dlogits = softmax - indicator/|P|
        g_logits[i, cand] += soft
        for j in pos:
            g_logits[i, j] -= 1.0 / pos.size
    loss /= m
    g_logits /= m
    # z_ij = h_i . h_j / tau  =>  dL/dh = (G @ h + G.T @ h) / tau
    grad_h = (g_logits @ h + g_logits.T @ h) / tau
    return float(loss), grad_h[:n], grad_h[n:]


def total_loss(l_diff: float, l_ref: float, alpha: float, beta: float) -> float:
    """Weighted sum alpha * l_diff + beta * l_ref."""
    return alpha * l_diff + beta * l_ref


def grad_check(f: Callable[[np.ndarray], Tuple[float, np.ndarray]],
               theta0: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error between f's analytic gradient and central
    differences, with denominator max(|analytic|, |numeric|, 1e-8).

    ``f`` maps a parameter vector to (value, gradient); only the value is
    used on the perturbed probes.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    if not (h > 0):
        raise ValueError("h must be positive")
    value, grad = f(theta0)
    grad = np.asarray(grad, dtype=np.float64)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise ValueError("non-finite evaluation at theta0")
    worst = 0.0
    for i in range(theta0.size):
        probe = theta0.copy()
        probe[i] = theta0[i] + h
        up = f(probe)[0]
        probe[i] = theta0[i] - h
        down = f(probe)[0]
        if not (np.isfinite(up) and np.isfinite(down)):
            raise ValueError(f"non-finite evaluation near theta0 (component {i})")
        numeric = (up - down) / (2.0 * h)
        denom = max(abs(grad[i]), abs(numeric), 1e-8)
        worst = max(worst, abs(grad[i] - numeric) / denom)
    return worst
