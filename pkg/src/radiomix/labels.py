"""Event-list annotations, per-frame label matrices and the TSV format."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._validation import check_frame_matrix
from .exceptions import AnnotationError

LABELS = ("music", "speech")
FRAME_HOP_S = 0.010


class Event(NamedTuple):
    onset: float
    offset: float
    label: str


def _merge(events):
    merged = []
    for ev in sorted(events):
        if merged and ev.onset <= merged[-1].offset:
            last = merged[-1]
            merged[-1] = Event(last.onset, max(last.offset, ev.offset), last.label)
        else:
            merged.append(ev)
    return merged


class EventList(Sequence):
    """Ordered ``(onset, offset, label)`` events.

    Overlapping or touching events with the same label are merged on
    construction; events of different labels may overlap freely.
    """

    __slots__ = ("_events",)

    def __init__(self, events=()):
        by_label = {label: [] for label in LABELS}
        for ev in events:
            onset, offset, label = ev
            onset, offset = float(onset), float(offset)
            if label not in by_label:
                raise AnnotationError(f"unknown label {label!r} (expected one of {LABELS})")
            if not (np.isfinite(onset) and np.isfinite(offset)) or onset < 0:
                raise AnnotationError(f"invalid event times ({onset}, {offset})")
            if not onset < offset:
                raise AnnotationError(f"event onset {onset} must precede offset {offset}")
            by_label[label].append(Event(onset, offset, label))
        out = []
        for items in by_label.values():
            out.extend(_merge(items))
        self._events = tuple(sorted(out, key=lambda e: (e.onset, e.offset, e.label)))

    def __getitem__(self, i):
        return self._events[i]

    def __len__(self):
        return len(self._events)

    def __eq__(self, other):
        if isinstance(other, EventList):
            return self._events == other._events
        return NotImplemented

    def __hash__(self):
        return hash(self._events)

    def __repr__(self):
        return f"EventList({list(self._events)!r})"

    def of(self, label):
        return [e for e in self._events if e.label == label]

    @property
    def end(self):
        return max((e.offset for e in self._events), default=0.0)

    def shifted(self, delta):
        """Shift every event by ``delta`` seconds, clipping at 0."""
        out = []
        for e in self._events:
            on, off = max(0.0, e.onset + delta), e.offset + delta
            if off > on:
                out.append((on, off, e.label))
        return EventList(out)

    def rounded(self, decimals=3):
        return EventList(
            (round(e.onset, decimals), round(e.offset, decimals), e.label)
            for e in self._events
            if round(e.offset, decimals) > round(e.onset, decimals)
        )


def events_to_frames(events, n_frames, hop_s=FRAME_HOP_S):
    """Binary ``n_frames x 2`` matrix (music, speech) decided at frame centers."""
    events = events if isinstance(events, EventList) else EventList(events)
    if events.end > n_frames * hop_s + 1e-9:
        raise AnnotationError(
            f"event ends at {events.end} s beyond the {n_frames * hop_s:.3f} s timeline"
        )
    centers = (np.arange(n_frames) + 0.5) * hop_s
    frames = np.zeros((n_frames, len(LABELS)), dtype=np.uint8)
    for e in events:
        col = LABELS.index(e.label)
        lo = np.searchsorted(centers, e.onset, side="left")
        hi = np.searchsorted(centers, e.offset, side="left")
        frames[lo:hi, col] = 1
    return frames


def frames_to_events(frames, hop_s=FRAME_HOP_S):
    """Maximal runs of active frames become ``[start*hop, stop*hop)`` events."""
    arr = check_frame_matrix(frames, n_cols=len(LABELS), binary=True)
    out = []
    for col, label in enumerate(LABELS):
        padded = np.concatenate(([0], arr[:, col].astype(np.int8), [0]))
        edges = np.flatnonzero(np.diff(padded))
        for start, stop in zip(edges[0::2], edges[1::2]):
            out.append((start * hop_s, stop * hop_s, label))
    return EventList(out)


def write_annotations(path, events):
    events = events if isinstance(events, EventList) else EventList(events)
    lines = [f"{e.onset:.3f}\t{e.offset:.3f}\t{e.label}\n" for e in events]
    Path(path).write_text("".join(lines))


def read_annotations(path):
    """Parse a TSV of ``onset offset label`` lines.

    Blank lines and lines starting with ``#`` are skipped; any whitespace
    separates fields.
    """
    events = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise AnnotationError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            onset, offset = float(parts[0]), float(parts[1])
        except ValueError:
            raise AnnotationError(f"{path}:{lineno}: non-numeric time in {line!r}") from None
        if parts[2] not in LABELS:
            raise AnnotationError(f"{path}:{lineno}: unknown label {parts[2]!r}")
        if not 0 <= onset < offset:
            raise AnnotationError(f"{path}:{lineno}: invalid interval {onset}..{offset}")
        events.append((onset, offset, parts[2]))
    return EventList(events)
