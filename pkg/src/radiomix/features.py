"""Log-Mel spectrogram features and the ``.melf`` matrix file format."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import SAMPLE_RATE, check_signal
from .corpus import AudioClip

N_FFT = 1024
HOP_LENGTH = 220
N_MELS = 80
FMIN = 64.0
FMAX = 8000.0
LOG_FLOOR = 1e-10

MELF_MAGIC = b"MELF"


def hz_to_mel(f, scale="htk"):
    f = np.asarray(f, dtype=np.float64)
    if scale == "htk":
        return 2595.0 * np.log10(1.0 + f / 700.0)
    if scale == "slaney":
        f_sp, min_log_hz = 200.0 / 3, 1000.0
        min_log_mel, logstep = min_log_hz / f_sp, np.log(6.4) / 27.0
        lin = f / f_sp
        return np.where(f >= min_log_hz, min_log_mel + np.log(np.maximum(f, 1e-12) / min_log_hz) / logstep, lin)
    raise ValueError(f"unknown mel scale {scale!r}")


def mel_to_hz(m, scale="htk"):
    m = np.asarray(m, dtype=np.float64)
    if scale == "htk":
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    if scale == "slaney":
        f_sp, min_log_hz = 200.0 / 3, 1000.0
        min_log_mel, logstep = min_log_hz / f_sp, np.log(6.4) / 27.0
        return np.where(m >= min_log_mel, min_log_hz * np.exp(logstep * (m - min_log_mel)), f_sp * m)
    raise ValueError(f"unknown mel scale {scale!r}")


def mel_band_edges(n_mels=N_MELS, fmin=FMIN, fmax=FMAX, scale="htk"):
    """``n_mels + 2`` frequencies; band ``k`` peaks at ``edges[k + 1]``."""
    if not 0 <= fmin < fmax:
        raise ValueError(f"need 0 <= fmin < fmax, got {fmin}, {fmax}")
    return mel_to_hz(np.linspace(hz_to_mel(fmin, scale), hz_to_mel(fmax, scale), n_mels + 2), scale)


def mel_filterbank(sample_rate=SAMPLE_RATE, n_fft=N_FFT, n_mels=N_MELS, fmin=FMIN, fmax=FMAX, scale="htk"):
    """Triangular filters, shape ``(n_mels, n_fft // 2 + 1)``, unit peak."""
    if fmax > sample_rate / 2:
        raise ValueError(f"fmax {fmax} exceeds Nyquist {sample_rate / 2}")
    edges = mel_band_edges(n_mels, fmin, fmax, scale)
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (center - lower)
    falling = (upper - freqs) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def _periodic_hann(n):
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def power_spectrogram(x, n_fft=N_FFT, hop_length=HOP_LENGTH):
    """Centered (reflect-padded) STFT power, shape ``(n_frames, n_fft//2 + 1)``."""
    pad = n_fft // 2
    mode = "reflect" if len(x) > pad else "constant"
    padded = np.pad(x, pad, mode=mode)
    n_frames = 1 + len(x) // hop_length
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[::hop_length][:n_frames]
    spec = np.fft.rfft(frames * _periodic_hann(n_fft), axis=1)
    return spec.real**2 + spec.imag**2


def mel_spectrogram(
    clip,
    sample_rate=SAMPLE_RATE,
    n_fft=N_FFT,
    hop_length=HOP_LENGTH,
    n_mels=N_MELS,
    fmin=FMIN,
    fmax=FMAX,
    scale="htk",
):
    """Natural-log Mel energies, shape ``(1 + len // hop_length, n_mels)``.

    An 8 s clip at 22050 Hz yields 802 frames.
    """
    if isinstance(clip, AudioClip):
        x, sample_rate = clip.samples, clip.sample_rate
    else:
        x = check_signal(clip, name="clip")
    if len(x) < hop_length:
        raise ValueError(f"clip must hold at least one hop ({hop_length} samples)")
    fb = mel_filterbank(sample_rate, n_fft, n_mels, fmin, fmax, scale)
    energies = power_spectrogram(x, n_fft, hop_length) @ fb.T
    return np.log(np.maximum(energies, LOG_FLOOR))


class LogMelSpectrogram(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping clips to log-Mel matrices.

    ``transform`` accepts one clip (1-D array or :class:`AudioClip`) and
    returns a 2-D matrix, or a sequence / 2-D array of equal-length clips and
    returns a 3-D stack.
    """

    def __init__(self, sample_rate=SAMPLE_RATE, n_fft=N_FFT, hop_length=HOP_LENGTH,
                 n_mels=N_MELS, fmin=FMIN, fmax=FMAX, mel_scale="htk"):
        self.sample_rate = sample_rate
        self.n_fft = n_fft
        self.hop_length = hop_length
        self.n_mels = n_mels
        self.fmin = fmin
        self.fmax = fmax
        self.mel_scale = mel_scale

    def fit(self, X=None, y=None):
        self.filterbank_ = mel_filterbank(
            self.sample_rate, self.n_fft, self.n_mels, self.fmin, self.fmax, self.mel_scale
        )
        return self

    def _one(self, x):
        return mel_spectrogram(x, self.sample_rate, self.n_fft, self.hop_length,
                               self.n_mels, self.fmin, self.fmax, self.mel_scale)

    def transform(self, X):
        if isinstance(X, AudioClip) or np.ndim(X) == 1:
            return self._one(X)
        return np.stack([self._one(x) for x in X])

    def __sklearn_is_fitted__(self):
        return True


def write_melf(path, matrix):
    """Write a 2-D matrix as ``MELF`` + rows, cols (uint32 LE) + float32 LE data."""
    arr = np.asarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    header = MELF_MAGIC + struct.pack("<II", *arr.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(arr).tobytes())


def read_melf(path):
    raw = Path(path).read_bytes()
    if raw[:4] != MELF_MAGIC or len(raw) < 12:
        raise ValueError(f"{path}: not a MELF matrix file")
    rows, cols = struct.unpack("<II", raw[4:12])
    body = raw[12:]
    if len(body) != rows * cols * 4:
        raise ValueError(f"{path}: expected {rows}x{cols} floats, found {len(body)} bytes")
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols).astype(np.float64)
