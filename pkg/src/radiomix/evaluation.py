"""Segment-based precision / recall / F-measure at 10 ms resolution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labels import LABELS, EventList, read_annotations

SEGMENT_S = 0.010


@dataclass(frozen=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other):
        return ClassCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def precision(self):
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self):
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f_measure(self):
        # equals 2PR / (P + R); the count form is exactly symmetric in fp/fn
        d = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / d if d else 0.0


@dataclass(frozen=True)
class SegmentMetrics:
    """Per-class and overall segment-based scores.

    ``average="micro"`` pools the class counts for the overall scores;
    ``"macro"`` averages the per-class scores.
    """

    counts: dict = field(default_factory=lambda: {c: ClassCounts() for c in LABELS})
    segment_s: float = SEGMENT_S
    average: str = "micro"

    def __add__(self, other):
        return SegmentMetrics(
            {c: self.counts[c] + other.counts[c] for c in LABELS}, self.segment_s, self.average
        )

    def _overall(self):
        return sum(self.counts.values(), ClassCounts())

    @property
    def precision(self):
        if self.average == "macro":
            return sum(c.precision for c in self.counts.values()) / len(self.counts)
        return self._overall().precision

    @property
    def recall(self):
        if self.average == "macro":
            return sum(c.recall for c in self.counts.values()) / len(self.counts)
        return self._overall().recall

    @property
    def f_measure(self):
        if self.average == "macro":
            return sum(c.f_measure for c in self.counts.values()) / len(self.counts)
        return self._overall().f_measure

    def to_dict(self):
        out = {
            label: {
                "tp": c.tp, "fp": c.fp, "fn": c.fn,
                "precision": c.precision, "recall": c.recall, "f_measure": c.f_measure,
            }
            for label, c in self.counts.items()
        }
        out["overall"] = {
            "precision": self.precision, "recall": self.recall, "f_measure": self.f_measure,
            "average": self.average,
        }
        out["segment_s"] = self.segment_s
        return out

    def table(self):
        rows = [f"{'class':<8} {'TP':>8} {'FP':>8} {'FN':>8} {'P':>7} {'R':>7} {'F':>7}"]
        for label, c in self.counts.items():
            rows.append(
                f"{label:<8} {c.tp:>8d} {c.fp:>8d} {c.fn:>8d} "
                f"{c.precision:>7.4f} {c.recall:>7.4f} {c.f_measure:>7.4f}"
            )
        o = self._overall()
        rows.append(
            f"{'overall':<8} {o.tp:>8d} {o.fp:>8d} {o.fn:>8d} "
            f"{self.precision:>7.4f} {self.recall:>7.4f} {self.f_measure:>7.4f}"
        )
        return "\n".join(rows)


def n_segments(duration_s, segment_s=SEGMENT_S):
    if not duration_s > 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    # round first so that e.g. 2.0 / 0.01 never ceils to 201
    return math.ceil(round(duration_s / segment_s, 9))


def segment_activity(events, n_seg, segment_s=SEGMENT_S):
    """Boolean ``(n_seg, 2)``: segment ``[i*s, (i+1)*s)`` intersects an event."""
    bounds = np.arange(n_seg + 1) * segment_s
    active = np.zeros((n_seg, len(LABELS)), dtype=bool)
    for e in events:
        col = LABELS.index(e.label)
        first = np.searchsorted(bounds[1:], e.onset, side="right")
        stop = np.searchsorted(bounds[:-1], e.offset, side="left")
        active[first:stop, col] = True
    return active


def segment_counts(reference, prediction, duration_s, segment_s=SEGMENT_S, average="micro"):
    reference = reference if isinstance(reference, EventList) else EventList(reference)
    prediction = prediction if isinstance(prediction, EventList) else EventList(prediction)
    n_seg = n_segments(duration_s, segment_s)
    end = n_seg * segment_s
    for name, ev in (("reference", reference), ("prediction", prediction)):
        if ev.end > max(duration_s, end) + 1e-9:
            raise ValueError(f"{name} event ends at {ev.end} s, beyond duration {duration_s} s")
    ref = segment_activity(reference, n_seg, segment_s)
    pred = segment_activity(prediction, n_seg, segment_s)
    counts = {}
    for col, label in enumerate(LABELS):
        r, p = ref[:, col], pred[:, col]
        counts[label] = ClassCounts(int(np.sum(r & p)), int(np.sum(p & ~r)), int(np.sum(r & ~p)))
    return SegmentMetrics(counts, segment_s, average)


def segment_metrics(reference, prediction, duration_s, segment_s=SEGMENT_S, average="micro"):
    """Compare two event lists segment by segment over ``duration_s`` seconds."""
    return segment_counts(reference, prediction, duration_s, segment_s, average)


def evaluate_run(ref_dir, pred_dir, segment_s=SEGMENT_S, average="micro"):
    """Pool segment counts over every ``*.tsv`` stem present in both directories.

    The timeline of each file ends at its last reference or predicted event;
    trailing inactive segments add no TP/FP/FN and so cannot change scores.
    Returns ``(total, per_file)``.
    """
    ref_dir, pred_dir = Path(ref_dir), Path(pred_dir)
    for d in (ref_dir, pred_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"annotation directory not found: {d}")
    refs = {p.stem: p for p in ref_dir.glob("*.tsv")}
    preds = {p.stem: p for p in pred_dir.glob("*.tsv")}
    missing = sorted(set(refs) ^ set(preds))
    if missing:
        raise ValueError(
            "reference/prediction stems differ: "
            + ", ".join(f"{s}.tsv (only in {'ref' if s in refs else 'pred'})" for s in missing)
        )
    if not refs:
        raise ValueError(f"no .tsv annotations in {ref_dir}")
    total = SegmentMetrics(segment_s=segment_s, average=average)
    per_file = {}
    for stem in sorted(refs):
        ref, pred = read_annotations(refs[stem]), read_annotations(preds[stem])
        duration = max(ref.end, pred.end, segment_s)
        m = segment_counts(ref, pred, duration, segment_s, average)
        per_file[stem] = m
        total = total + m
    return total, per_file


def report_json(total, per_file):
    return json.dumps(
        {"overall": total.to_dict(), "files": {k: v.to_dict() for k, v in per_file.items()}},
        indent=1,
        sort_keys=True,
    )
