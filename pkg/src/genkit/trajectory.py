"""Recording, persisting, and analyzing step-wise generation trajectories.

A trajectory is the ordered list of intermediate states an iterative
sampler walked through, one snapshot per step, plus enough metadata to
recompute per-step metrics and a 2-D projection for the explorer UI.

File format (JSONL, one trajectory per file, extension ``.traj.jsonl``):
line 1 is the header ``{"version": 1, "id", "kind", "shape", "seed",
"condition"}``; each following line is ``{"step": k, "state": [...]}`` with
optional ``"mask"`` (0/1 ints) and ``"confidence"`` arrays. Token states
are integers, continuous states float64; floats survive the round trip
exactly because json uses shortest-repr serialization.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import TrajectoryFormatError
from .schedules import NoiseSchedule

TRAJECTORY_KINDS = ("mgm", "diffusion", "flow")
FILE_VERSION = 1
MAX_SNAPSHOT_ELEMENTS = 65536


def new_trajectory_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


@dataclass
class Snapshot:
    """State of the sampler after one step."""

    step: int
    state: np.ndarray
    mask: Optional[np.ndarray] = None
    confidence: Optional[np.ndarray] = None

    def __post_init__(self):
        self.state = np.asarray(self.state)
        if self.state.size > MAX_SNAPSHOT_ELEMENTS:
            raise ValueError(
                f"snapshot of {self.state.size} elements exceeds the "
                f"{MAX_SNAPSHOT_ELEMENTS}-element desk-scale limit"
            )
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.state.shape:
                raise ValueError("mask shape must match state shape")
        if self.confidence is not None:
            self.confidence = np.asarray(self.confidence, dtype=np.float64)
            if self.confidence.shape != self.state.shape:
                raise ValueError("confidence shape must match state shape")

    def equals(self, other: "Snapshot") -> bool:
        if self.step != other.step:
            return False
        if not np.array_equal(self.state, other.state):
            return False
        for a, b in ((self.mask, other.mask), (self.confidence, other.confidence)):
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True


@dataclass
class Trajectory:
    """Ordered snapshots plus run metadata.

    ``created_at`` is filesystem metadata (mtime at load time), not part of
    the persisted format, and is excluded from structural equality.
    """

    id: str
    kind: str
    steps: List[Snapshot]
    condition: dict = field(default_factory=dict)
    seed: Optional[int] = None
    created_at: Optional[str] = None

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind: {self.kind!r}")

    @property
    def shape(self) -> tuple:
        return tuple(self.steps[0].state.shape) if self.steps else ()

    def validate(self) -> None:
        if not self.steps:
            raise ValueError("trajectory must contain at least one step")
        shape = self.steps[0].state.shape
        for snap in self.steps:
            if snap.state.shape != shape:
                raise ValueError("all snapshots must share one shape")

    def equals(self, other: "Trajectory") -> bool:
        return (
            self.id == other.id
            and self.kind == other.kind
            and self.seed == other.seed
            and self.condition == other.condition
            and len(self.steps) == len(other.steps)
            and all(a.equals(b) for a, b in zip(self.steps, other.steps))
        )


@dataclass(frozen=True)
class StepMetricSeries:
    name: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


@dataclass(frozen=True)
class Projection2D:
    coords: np.ndarray
    explained_variance: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=np.float64))


def compute_metrics(traj: Trajectory, reference: Optional[np.ndarray] = None,
                    noise_schedule: Optional[NoiseSchedule] = None) -> List[StepMetricSeries]:
    """Per-step metric series for a trajectory.

    Token trajectories get masked_fraction, mean_chosen_confidence, and
    (with a reference sequence) token_agreement_vs_reference. Continuous
    trajectories get state_l2_norm, mse_vs_reference, and, when a noise
    schedule is attached, the signal-to-noise proxy abar/(1-abar) mapped
    linearly over the steps (capped so values stay JSON-finite).
    """
    traj.validate()
    n_steps = len(traj.steps)
    series: List[StepMetricSeries] = []
    if reference is not None:
        reference = np.asarray(reference)
        if reference.shape != traj.steps[0].state.shape:
            raise ValueError("reference shape does not match trajectory states")

    if traj.kind == "mgm":
        masked = np.array([
            (s.mask.mean() if s.mask is not None else 0.0) for s in traj.steps
        ])
        series.append(StepMetricSeries("masked_fraction", masked))
        conf = np.array([
            (float(s.confidence.mean()) if s.confidence is not None else 0.0)
            for s in traj.steps
        ])
        series.append(StepMetricSeries("mean_chosen_confidence", conf))
        if reference is not None:
            agree = np.array([
                float((s.state == reference).mean()) for s in traj.steps
            ])
            series.append(StepMetricSeries("token_agreement_vs_reference", agree))
    else:
        norms = np.array([float(np.linalg.norm(s.state)) for s in traj.steps])
        series.append(StepMetricSeries("state_l2_norm", norms))
        if reference is not None:
            mse = np.array([
                float(np.mean((s.state - reference) ** 2)) for s in traj.steps
            ])
            series.append(StepMetricSeries("mse_vs_reference", mse))
        if noise_schedule is not None:
            N = noise_schedule.num_steps
            span = max(n_steps - 1, 1)
            snr = []
            for k in range(n_steps):
                n = int(round(N * (span - k) / span)) if n_steps > 1 else 0
                abar = noise_schedule.alpha_bars[n]
                snr.append(float(abar / max(1.0 - abar, 1e-12)))
            series.append(StepMetricSeries("snr_proxy", np.array(snr)))
    return series


def _embed_states(traj: Trajectory) -> np.ndarray:
    """Flatten snapshots to real vectors; token states expand to one-hots
    over the distinct ids that occur in the trajectory."""
    states = [s.state.ravel() for s in traj.steps]
    if traj.kind != "mgm":
        return np.array([s.astype(np.float64) for s in states])
    values = np.unique(np.concatenate(states))
    index = {int(v): i for i, v in enumerate(values)}
    width = len(values)
    out = np.zeros((len(states), states[0].size * width))
    for row, ids in enumerate(states):
        for pos, tok in enumerate(ids):
            out[row, pos * width + index[int(tok)]] = 1.0
    return out


def project_steps(traj: Trajectory) -> Projection2D:
    """Top-2 PCA of the step states with a deterministic sign convention:
    each component is flipped so its largest-magnitude coordinate is
    positive. Zero-variance trajectories project to all zeros."""
    traj.validate()
    if len(traj.steps) < 2:
        raise ValueError("projection needs at least 2 steps")
    X = _embed_states(traj)
    Xc = X - X.mean(axis=0, keepdims=True)
    if not np.any(np.abs(Xc) > 0.0):
        return Projection2D(np.zeros((len(traj.steps), 2)), (0.0, 0.0))
    u, s, vt = np.linalg.svd(Xc, full_matrices=False)
    total = float((s ** 2).sum())
    coords = np.zeros((X.shape[0], 2))
    ratios = [0.0, 0.0]
    for c in range(min(2, s.size)):
        comp = vt[c]
        pivot = int(np.argmax(np.abs(comp)))
        if comp[pivot] < 0:
            comp = -comp
        coords[:, c] = Xc @ comp
        ratios[c] = float(s[c] ** 2 / total) if total > 0 else 0.0
    return Projection2D(coords, (ratios[0], ratios[1]))


def _snapshot_to_json(snap: Snapshot, kind: str) -> dict:
    if kind == "mgm":
        state = [int(v) for v in snap.state.ravel()]
    else:
        state = [float(v) for v in snap.state.ravel()]
    doc = {"step": snap.step, "state": state}
    if snap.mask is not None:
        doc["mask"] = [int(v) for v in snap.mask.ravel()]
    if snap.confidence is not None:
        doc["confidence"] = [float(v) for v in snap.confidence.ravel()]
    return doc


def save(traj: Trajectory, path) -> None:
    """Write a trajectory as versioned JSONL; see the module docstring."""
    traj.validate()
    header = {
        "version": FILE_VERSION,
        "id": traj.id,
        "kind": traj.kind,
        "shape": list(traj.shape),
        "seed": traj.seed,
        "condition": traj.condition,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for snap in traj.steps:
            fh.write(json.dumps(_snapshot_to_json(snap, traj.kind)) + "\n")


def load(path) -> Trajectory:
    """Read a trajectory file; errors carry the last good line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TrajectoryFormatError("empty trajectory file", 0)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise TrajectoryFormatError("malformed header", 1)
    if not isinstance(header, dict) or header.get("version") != FILE_VERSION:
        raise TrajectoryFormatError(
            f"unsupported trajectory version {header.get('version')!r}", 1)
    kind = header.get("kind")
    if kind not in TRAJECTORY_KINDS:
        raise TrajectoryFormatError(f"unknown kind {kind!r}", 1)
    shape = tuple(header.get("shape", []))
    dtype = np.int64 if kind == "mgm" else np.float64
    steps: List[Snapshot] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        try:
            doc = json.loads(raw)
            snap = Snapshot(
                step=int(doc["step"]),
                state=np.asarray(doc["state"], dtype=dtype).reshape(shape),
                mask=(np.asarray(doc["mask"], dtype=bool).reshape(shape)
                      if "mask" in doc else None),
                confidence=(np.asarray(doc["confidence"], dtype=np.float64).reshape(shape)
                            if "confidence" in doc else None),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise TrajectoryFormatError(
                f"malformed step line (last good line {lineno - 1})", lineno)
        steps.append(snap)
    if not steps:
        raise TrajectoryFormatError("trajectory file has a header but no steps", 1)
    created = None
    try:
        mtime = os.path.getmtime(path)
        from datetime import datetime, timezone
        created = datetime.fromtimestamp(mtime, tz=timezone.utc).isoformat()
    except OSError:
        pass
    traj = Trajectory(
        id=str(header["id"]),
        kind=kind,
        steps=steps,
        condition=dict(header.get("condition") or {}),
        seed=header.get("seed"),
        created_at=created,
    )
    traj.validate()
    return traj


def serve(store_dir, bind: str = "127.0.0.1:8000"):
    """Launch the read-only trajectory HTTP service in a background thread.

    Returns a handle with ``.stop()``; the CLI uses the blocking variant in
    ``genkit.server`` instead.
    """
    from .server import ServerHandle
    return ServerHandle.start(store_dir, bind)
