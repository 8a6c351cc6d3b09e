"""From per-frame model scores to clean event lists."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_frame_matrix, check_positive
from .labels import FRAME_HOP_S, LABELS, EventList, frames_to_events

WINDOW_S = 8.0
WINDOW_HOP_S = 6.0
EDGE_S = 1.0
THRESHOLD = 0.5

# tolerance for comparing millisecond-resolution times
_EPS = 1e-9


@dataclass(frozen=True)
class SmoothingConfig:
    min_speech_s: float = 1.3
    min_music_s: float = 3.4
    max_gap_speech_s: float = 0.4
    max_gap_music_s: float = 0.6

    def __post_init__(self):
        for name in ("min_speech_s", "min_music_s", "max_gap_speech_s", "max_gap_music_s"):
            check_positive(getattr(self, name), name)

    def min_duration(self, label):
        return self.min_music_s if label == "music" else self.min_speech_s

    def max_gap(self, label):
        return self.max_gap_music_s if label == "music" else self.max_gap_speech_s


def expected_window_count(n_frames, window_frames, hop_frames):
    if n_frames <= window_frames:
        return 1
    return -(-(n_frames - window_frames) // hop_frames) + 1


def stitch_windows(windows, n_frames=None, window_s=WINDOW_S, hop_s=WINDOW_HOP_S,
                   edge_s=EDGE_S, frame_hop_s=FRAME_HOP_S):
    """Join overlapping analysis windows into one full-timeline matrix.

    Window ``j`` starts at ``j * hop_s``. Each window keeps only its core
    (``edge_s`` dropped at both ends) except that the first window keeps its
    head and the last window its tail, so every output frame comes from
    exactly one window. ``n_frames`` is the recording length in frames; by
    default the last window is taken to end the recording.
    """
    windows = [check_frame_matrix(w, n_cols=len(LABELS), name="window") for w in windows]
    if not windows:
        raise ValueError("no windows to stitch")
    win = windows[0].shape[0]
    if any(w.shape[0] != win for w in windows):
        raise ValueError("all windows must have the same number of frames")
    hop = round(hop_s / frame_hop_s)
    edge = round(edge_s / frame_hop_s)
    core_end = round((window_s - edge_s) / frame_hop_s)
    if n_frames is None:
        n_frames = hop * (len(windows) - 1) + win
    expected = expected_window_count(n_frames, win, hop)
    if len(windows) != expected:
        raise ValueError(
            f"{len(windows)} windows given but a {n_frames}-frame recording needs {expected}"
        )
    if len(windows) == 1:
        return windows[0][:n_frames].copy()

    parts = []
    for j, w in enumerate(windows):
        lo = 0 if j == 0 else edge
        hi = n_frames - hop * j if j == len(windows) - 1 else core_end
        parts.append(w[lo:hi])
    out = np.concatenate(parts)
    assert out.shape[0] == n_frames
    return out


def threshold_probs(probs, thr=THRESHOLD):
    """Binary labels, active where ``prob >= thr``."""
    return (check_frame_matrix(probs) >= thr).astype(np.uint8)


def _merge_gaps(intervals, max_gap):
    merged = []
    for on, off in intervals:
        if merged and on - merged[-1][1] <= max_gap + _EPS:
            merged[-1][1] = max(merged[-1][1], off)
        else:
            merged.append([on, off])
    return merged


def smooth_events(events, cfg=None):
    """Bridge short same-class gaps, then drop short events, per class."""
    cfg = cfg or SmoothingConfig()
    events = events if isinstance(events, EventList) else EventList(events)
    out = []
    for label in LABELS:
        intervals = [(e.onset, e.offset) for e in events.of(label)]
        for on, off in _merge_gaps(intervals, cfg.max_gap(label)):
            if off - on >= cfg.min_duration(label) - _EPS:
                out.append((on, off, label))
    return EventList(out)


class SegmentPostProcessor(TransformerMixin, BaseEstimator):
    """Threshold, convert to events and smooth per-frame ``(music, speech)`` scores.

    ``transform`` takes one ``n_frames x 2`` probability matrix, or a list of
    8 s window matrices (stitched first), and returns an :class:`EventList`.
    """

    def __init__(self, threshold=THRESHOLD, min_speech_s=1.3, min_music_s=3.4,
                 max_gap_speech_s=0.4, max_gap_music_s=0.6, frame_hop_s=FRAME_HOP_S):
        self.threshold = threshold
        self.min_speech_s = min_speech_s
        self.min_music_s = min_music_s
        self.max_gap_speech_s = max_gap_speech_s
        self.max_gap_music_s = max_gap_music_s
        self.frame_hop_s = frame_hop_s

    def _smoothing(self):
        return SmoothingConfig(
            self.min_speech_s, self.min_music_s, self.max_gap_speech_s, self.max_gap_music_s
        )

    def fit(self, X=None, y=None):
        self.smoothing_ = self._smoothing()
        return self

    def __sklearn_is_fitted__(self):
        return True

    def transform(self, X):
        probs = X if np.ndim(X) == 2 else stitch_windows(X, frame_hop_s=self.frame_hop_s)
        events = frames_to_events(threshold_probs(probs, self.threshold), self.frame_hop_s)
        return smooth_events(events, self._smoothing())
