"""Fade curves and gain envelopes (amplitude fades)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

EXP_SHARPNESS = 3.0


class FadeCurve(str, Enum):
    LINEAR = "linear"
    EXP_CONVEX = "exp_convex"
    EXP_CONCAVE = "exp_concave"
    S_CURVE = "s_curve"


def _exp_curve(t, k):
    return np.expm1(k * t) / np.expm1(k)


def fade_gain(curve, t, sharpness=EXP_SHARPNESS):
    """Fade-in gain at normalized time ``t`` in [0, 1].

    ``exp_convex`` bows below the diagonal (slow start), ``exp_concave``
    above it (fast start). Every curve maps 0 to 0 and 1 to 1 exactly.
    """
    curve = FadeCurve(curve)
    t = np.asarray(t, dtype=np.float64)
    if np.any((t < 0) | (t > 1)) or np.any(np.isnan(t)):
        raise ValueError("fade time must lie in [0, 1]")
    if curve is FadeCurve.LINEAR:
        g = t.copy()
    elif curve is FadeCurve.EXP_CONVEX:
        g = _exp_curve(t, sharpness)
    elif curve is FadeCurve.EXP_CONCAVE:
        g = _exp_curve(t, -sharpness)
    else:
        g = (1.0 - np.cos(np.pi * t)) / 2.0
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class FadeSpec:
    curve: FadeCurve
    duration_s: float
    direction: str = "in"

    def __post_init__(self):
        object.__setattr__(self, "curve", FadeCurve(self.curve))
        if self.direction not in ("in", "out"):
            raise ValueError(f"fade direction must be 'in' or 'out', got {self.direction!r}")
        if not self.duration_s >= 0:
            raise ValueError(f"fade duration must be >= 0, got {self.duration_s}")

    def n_samples(self, sample_rate):
        return round(self.duration_s * sample_rate)

    def to_json(self):
        return {"curve": self.curve.value, "duration_s": self.duration_s, "direction": self.direction}


def fade_envelope(curve, n, direction="in", sharpness=EXP_SHARPNESS):
    """Gain ramp of ``n`` samples with ``t_i = i / (n - 1)``.

    The first sample of a fade-in is exactly 0 and its last exactly 1; a
    fade-out is the same ramp evaluated at ``1 - t``. Ramps shorter than two
    samples are treated as no fade.
    """
    if n < 2:
        return np.ones(max(n, 0))
    t = np.arange(n) / (n - 1)
    if direction == "out":
        t = 1.0 - t
    return fade_gain(curve, t, sharpness)


def apply_fade(clip, spec, sharpness=EXP_SHARPNESS):
    """Apply ``spec`` to the head (fade-in) or tail (fade-out) of ``clip``."""
    n = spec.n_samples(clip.sample_rate)
    if n > len(clip):
        raise ValueError(
            f"fade of {spec.duration_s} s exceeds clip duration {clip.duration:.3f} s"
        )
    if n < 2:
        return clip
    y = clip.samples.copy()
    env = fade_envelope(spec.curve, n, spec.direction, sharpness)
    if spec.direction == "in":
        y[:n] *= env
    else:
        y[len(y) - n :] *= env
    return clip.with_samples(y)
