"""Residual vector quantization: layered nearest-neighbor encoding against
a stack of codebooks, decoding by entry summation, and k-means fitting of
the codebooks themselves.

Nearest-neighbor ties break to the lowest index, everywhere, so encoding
is deterministic across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

FILE_VERSION = 1


@dataclass(frozen=True)
class Codebook:
    """K entry vectors of dimension d, row-major."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] < 1:
            raise ValueError("entries must be a non-empty (K, d) matrix")
        if not np.all(np.isfinite(entries)):
            raise ValueError("entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class RvqStack:
    layers: Tuple[Codebook, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("stack needs at least one layer")
        d = layers[0].dim
        if any(cb.dim != d for cb in layers):
            raise ValueError("all layers must share one dimension")
        object.__setattr__(self, "layers", layers)

    @property
    def dim(self) -> int:
        return self.layers[0].dim

    @property
    def num_layers(self) -> int:
        return len(self.layers)


def nearest_entry(codebook: Codebook, x: np.ndarray) -> int:
    """Index of the closest entry by squared distance, lowest index on ties."""
    diff = codebook.entries - x
    return int(np.argmin(np.einsum("kd,kd->k", diff, diff)))


def rvq_encode(stack: RvqStack, x) -> Tuple[List[int], np.ndarray]:
    """Quantize layer by layer, each layer coding the residual left by the
    previous ones; returns the per-layer indices and the final residual."""
    residual = np.asarray(x, dtype=np.float64).copy()
    if residual.shape != (stack.dim,):
        raise ValueError(f"expected vector of dim {stack.dim}, got {residual.shape}")
    codes: List[int] = []
    for cb in stack.layers:
        idx = nearest_entry(cb, residual)
        codes.append(idx)
        residual = residual - cb.entries[idx]
    return codes, residual


def rvq_decode(stack: RvqStack, codes: Sequence[int]) -> np.ndarray:
    """Sum of the indexed entries over the provided layer prefix."""
    if len(codes) > stack.num_layers:
        raise ValueError("more codes than layers")
    out = np.zeros(stack.dim)
    for cb, code in zip(stack.layers, codes):
        code = int(code)
        if not (0 <= code < cb.size):
            raise ValueError(f"code {code} out of range for layer of size {cb.size}")
        out += cb.entries[code]
    return out


def kmeans_objective(data: np.ndarray, codebook: Codebook) -> float:
    """Sum of squared distances from each row to its nearest entry."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    d2 = ((data[:, None, :] - codebook.entries[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).sum())


def kmeans_fit(data, k: int, iters: int, seed: int = 0) -> Codebook:
    """Lloyd's iterations from a k-means++ style seeded initialization.

    Empty clusters are re-seeded from the point farthest from its assigned
    centroid. ``iters=0`` returns the initialization untouched, which is
    what lets tests replay the objective trajectory deterministically.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = data.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} data rows")
    rng = np.random.default_rng(seed)

    # k-means++ init: first centroid uniform, the rest proportional to the
    # squared distance to the nearest centroid chosen so far.
    centroids = np.empty((k, data.shape[1]))
    centroids[0] = data[int(rng.integers(n))]
    closest = ((data - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            centroids[j] = data[int(rng.integers(n))]
        else:
            centroids[j] = data[int(rng.choice(n, p=closest / total))]
        closest = np.minimum(closest, ((data - centroids[j]) ** 2).sum(axis=1))

    for _ in range(iters):
        d2 = ((data[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        nearest = d2[np.arange(n), assign]
        for j in range(k):
            members = data[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                centroids[j] = data[int(nearest.argmax())]
    return Codebook(centroids)


def fit_stack(data, sizes: Sequence[int], iters: int, seed: int = 0) -> RvqStack:
    """Greedy per-layer fitting: each layer's codebook is k-means over the
    residuals the previous layers leave behind."""
    residuals = np.atleast_2d(np.asarray(data, dtype=np.float64)).copy()
    layers = []
    for depth, k in enumerate(sizes):
        cb = kmeans_fit(residuals, k, iters, seed=seed + depth)
        layers.append(cb)
        idx = np.array([nearest_entry(cb, row) for row in residuals])
        residuals = residuals - cb.entries[idx]
    return RvqStack(tuple(layers))


def save_stack(stack: RvqStack, path) -> None:
    doc = {
        "version": FILE_VERSION,
        "dim": stack.dim,
        "layers": [
            {"size": cb.size, "entries": cb.entries.tolist()} for cb in stack.layers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_stack(path) -> RvqStack:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != FILE_VERSION:
        raise ValueError(f"unsupported codebook version {doc.get('version')!r}")
    layers = tuple(Codebook(np.asarray(layer["entries"], dtype=np.float64))
                   for layer in doc["layers"])
    stack = RvqStack(layers)
    if stack.dim != doc["dim"]:
        raise ValueError("declared dim does not match entries")
    return stack
