"""Temporal control: the timestamp/frequency caption grammar, the binary
event-by-frame occupancy matrix at 40 ms resolution, and the segment-F1 and
frequency-error metrics.

Caption grammar (standard form; free-text normalization is someone else's
job):

    timestamp caption := item (" and " item)* "."?
    item              := label " at " interval ("_" interval)*
    interval          := decimal "-" decimal        (onset < offset)

    frequency caption := fitem (" and " fitem)* "."?
    fitem             := label " " integer " times"

Labels are trimmed, non-empty, unique within a caption, and must not
contain the reserved substrings " at ", " and ", or "_". Times are
non-negative decimals in seconds.

All frame/segment bucketing happens in integer microseconds: a frame is
active iff its half-open window overlaps an interval with positive
measure, so a boundary shared by an interval end and a frame start
activates nothing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import ParseError

FRAME_LEN = 0.040
_FRAME_US = 40000
_RESERVED = (" at ", " and ", "_")
_NUM_RE = re.compile(r"^\d+(\.\d+)?$")


@dataclass(frozen=True)
class TimestampCaption:
    """Ordered (label, intervals) pairs; intervals are (onset, offset) seconds."""

    events: Tuple[Tuple[str, Tuple[Tuple[float, float], ...]], ...]

    def __post_init__(self):
        seen = set()
        for label, intervals in self.events:
            if not label:
                raise ValueError("labels must be non-empty")
            if label in seen:
                raise ValueError(f"duplicate label {label!r}")
            seen.add(label)
            for onset, offset in intervals:
                if not (0.0 <= onset < offset):
                    raise ValueError(f"bad interval {onset}-{offset} for {label!r}")

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.events)

    def max_offset(self) -> float:
        return max((off for _, ivs in self.events for _, off in ivs), default=0.0)


@dataclass(frozen=True)
class FrequencyCaption:
    """Ordered (label, count) pairs with unique labels."""

    events: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for label, count in self.events:
            if not label:
                raise ValueError("labels must be non-empty")
            if label in seen:
                raise ValueError(f"duplicate label {label!r}")
            seen.add(label)
            if count < 0:
                raise ValueError(f"negative count for {label!r}")

    def as_dict(self) -> Dict[str, int]:
        return dict(self.events)


@dataclass(frozen=True)
class TimestampMatrix:
    """Binary (events x frames) occupancy grid at 40 ms resolution."""

    labels: Tuple[str, ...]
    frames: int
    grid: np.ndarray
    frame_len: float = FRAME_LEN

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.uint8)
        if grid.shape != (len(self.labels), self.frames):
            raise ValueError("grid shape must be (len(labels), frames)")
        if not np.all((grid == 0) | (grid == 1)):
            raise ValueError("grid entries must be 0 or 1")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)


def _check_label(label: str, offset: int) -> str:
    label = label.strip()
    if not label:
        raise ParseError("empty label", offset)
    for res in _RESERVED:
        if res in label:
            raise ParseError(f"label contains reserved {res!r}", offset)
    return label


def _parse_number(text: str, offset: int) -> float:
    if not _NUM_RE.match(text):
        raise ParseError(f"malformed number {text!r}", offset)
    return float(text)


def _split_items(text: str):
    """Yield (item, byte offset) after stripping one trailing period."""
    if text.endswith("."):
        text = text[:-1]
    if not text.strip():
        raise ParseError("empty caption", 0)
    start = 0
    while True:
        cut = text.find(" and ", start)
        if cut < 0:
            yield text[start:], start
            return
        yield text[start:cut], start
        start = cut + len(" and ")


def parse_timestamp_caption(text: str) -> TimestampCaption:
    """Parse the standard timestamp form; errors carry byte offsets."""
    events = []
    for item, base in _split_items(text):
        cut = item.find(" at ")
        if cut < 0:
            raise ParseError("expected ' at '", base)
        label = _check_label(item[:cut], base)
        timing_base = base + cut + len(" at ")
        timings = item[cut + len(" at "):]
        if not timings:
            raise ParseError("missing timings", timing_base)
        intervals = []
        pos = 0
        for chunk in timings.split("_"):
            chunk_off = timing_base + pos
            pos += len(chunk) + 1
            dash = chunk.find("-")
            if dash < 0:
                raise ParseError(f"malformed interval {chunk!r}", chunk_off)
            onset = _parse_number(chunk[:dash], chunk_off)
            offset_val = _parse_number(chunk[dash + 1:], chunk_off + dash + 1)
            if onset >= offset_val:
                raise ParseError(f"onset {onset} >= offset {offset_val}", chunk_off)
            intervals.append((onset, offset_val))
        events.append((label, tuple(intervals)))
    try:
        return TimestampCaption(tuple(events))
    except ValueError as exc:
        raise ParseError(str(exc), 0)


def parse_frequency_caption(text: str) -> FrequencyCaption:
    """Parse the standard occurrence-frequency form."""
    events = []
    for item, base in _split_items(text):
        m = re.match(r"^(.*) (\d+) times$", item)
        if not m:
            raise ParseError("expected '<label> <count> times'", base)
        label = _check_label(m.group(1), base)
        events.append((label, int(m.group(2))))
    try:
        return FrequencyCaption(tuple(events))
    except ValueError as exc:
        raise ParseError(str(exc), 0)


def _fmt_time(value: float) -> str:
    out = repr(float(value))
    return out[:-2] if out.endswith(".0") else out


def format_timestamp_caption(cap: TimestampCaption) -> str:
    """Canonical text form: no trailing period, times in shortest repr."""
    items = []
    for label, intervals in cap.events:
        timing = "_".join(f"{_fmt_time(a)}-{_fmt_time(b)}" for a, b in intervals)
        items.append(f"{label} at {timing}")
    return " and ".join(items)


def format_frequency_caption(cap: FrequencyCaption) -> str:
    return " and ".join(f"{label} {count} times" for label, count in cap.events)


def _us(seconds: float) -> int:
    return int(round(seconds * 1e6))


def build_matrix(cap: TimestampCaption, clip_len: float) -> TimestampMatrix:
    """Rasterize a caption onto ceil(clip_len / 0.04) frames."""
    clip_us = _us(clip_len)
    max_off = _us(cap.max_offset())
    if clip_us < max_off:
        raise ValueError(f"clip_len {clip_len} shorter than the last offset")
    frames = (clip_us + _FRAME_US - 1) // _FRAME_US
    grid = np.zeros((len(cap.events), frames), dtype=np.uint8)
    for row, (_, intervals) in enumerate(cap.events):
        for onset, offset in intervals:
            on_us, off_us = _us(onset), _us(offset)
            first = on_us // _FRAME_US
            last = (off_us - 1) // _FRAME_US  # last frame starting strictly before offset
            grid[row, first:last + 1] = 1
    return TimestampMatrix(cap.labels, int(frames), grid)


def matrix_to_caption(matrix: TimestampMatrix) -> TimestampCaption:
    """Recover intervals from maximal frame runs (inverse on aligned captions)."""
    events = []
    for row, label in enumerate(matrix.labels):
        active = matrix.grid[row].astype(bool)
        intervals = []
        start = None
        for t, on in enumerate(active):
            if on and start is None:
                start = t
            elif not on and start is not None:
                intervals.append((start * FRAME_LEN, t * FRAME_LEN))
                start = None
        if start is not None:
            intervals.append((start * FRAME_LEN, matrix.frames * FRAME_LEN))
        events.append((label, tuple(intervals)))
    return TimestampCaption(tuple(events))


def matrix_to_json(matrix: TimestampMatrix) -> str:
    doc = {
        "labels": list(matrix.labels),
        "frame_len": matrix.frame_len,
        "frames": matrix.frames,
        "rows": ["".join(str(int(v)) for v in row) for row in matrix.grid],
    }
    return json.dumps(doc)


def matrix_from_json(text: str) -> TimestampMatrix:
    doc = json.loads(text)
    grid = np.array([[int(ch) for ch in row] for row in doc["rows"]],
                    dtype=np.uint8).reshape(len(doc["labels"]), doc["frames"])
    return TimestampMatrix(tuple(doc["labels"]), int(doc["frames"]), grid,
                           float(doc["frame_len"]))


def _segment_activity(cap: TimestampCaption, seg_us: int, n_segments: int) -> Dict[str, set]:
    out: Dict[str, set] = {}
    for label, intervals in cap.events:
        active = set()
        for onset, offset in intervals:
            on_us, off_us = _us(onset), _us(offset)
            first = on_us // seg_us
            last = (off_us - 1) // seg_us
            active.update(range(first, min(last, n_segments - 1) + 1))
        out[label] = active
    return out


def segment_f1(reference: TimestampCaption, predicted: TimestampCaption,
               segment_len: float = 1.0, clip_len: float = None) -> Tuple[float, float, float]:
    """Micro-averaged segment-based precision/recall/F1.

    The clip is cut into fixed segments; a (label, segment) cell is active
    when any interval overlaps it with positive measure. Empty-vs-empty is
    a perfect score by definition.
    """
    if not (segment_len > 0):
        raise ValueError("segment_len must be positive")
    if clip_len is None:
        raise ValueError("clip_len is required")
    needed = max(reference.max_offset(), predicted.max_offset())
    if clip_len < needed:
        raise ValueError(f"clip_len {clip_len} does not cover offsets up to {needed}")
    seg_us = _us(segment_len)
    clip_us = _us(clip_len)
    n_segments = max((clip_us + seg_us - 1) // seg_us, 1)
    ref = _segment_activity(reference, seg_us, n_segments)
    pred = _segment_activity(predicted, seg_us, n_segments)
    tp = fp = fn = 0
    for label in set(ref) | set(pred):
        r = ref.get(label, set())
        p = pred.get(label, set())
        tp += len(r & p)
        fp += len(p - r)
        fn += len(r - p)
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    return precision, recall, f1


def l1_freq(specified: Sequence[FrequencyCaption],
            detected: Sequence[FrequencyCaption]) -> float:
    """Mean absolute count error over samples and the union label set.

    Labels absent from one side count as zero occurrences. The class count
    C is the size of the union label set across all samples.
    """
    if len(specified) != len(detected):
        raise ValueError("need one detected caption per specified caption")
    if not specified:
        raise ValueError("need at least one sample")
    labels = set()
    for cap in list(specified) + list(detected):
        labels.update(cap.as_dict())
    if not labels:
        raise ValueError("no event classes present")
    total = 0.0
    for spec, det in zip(specified, detected):
        s, d = spec.as_dict(), det.as_dict()
        for label in labels:
            total += abs(s.get(label, 0) - d.get(label, 0))
    return total / (len(specified) * len(labels))


def count_occurrences(cap: TimestampCaption) -> FrequencyCaption:
    """Number of intervals per label, bridging timestamp ground truth to the
    frequency metric."""
    return FrequencyCaption(tuple((label, len(ivs)) for label, ivs in cap.events))
