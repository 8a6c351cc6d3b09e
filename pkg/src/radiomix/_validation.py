"""Input validation shared by the public functions and estimators."""

from __future__ import annotations

import numpy as np

SAMPLE_RATE = 22050


def check_signal(x, *, name="signal", allow_empty=False):
    """Return ``x`` as a contiguous 1-D float64 array of finite values."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return np.ascontiguousarray(arr)


def check_sample_rate(sample_rate, expected=SAMPLE_RATE):
    if int(sample_rate) != expected:
        raise ValueError(f"expected {expected} Hz audio, got {sample_rate} Hz")


def check_frame_matrix(a, *, n_cols=2, binary=False, name="frames"):
    """Validate an ``n_frames x n_cols`` label or probability matrix."""
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[1] != n_cols:
        raise ValueError(f"{name} must have shape (n_frames, {n_cols}), got {arr.shape}")
    arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if binary:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name} must contain only 0 and 1")
    elif arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
