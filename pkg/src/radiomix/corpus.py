"""Corpus ingestion: WAV decoding, standardization and random source segments.

Every file is brought to the canonical pipeline format (22050 Hz mono float in
[-1, 1]), stripped of dead air, and looped up to the example length before a
random segment is cut from it.
"""

from __future__ import annotations

import functools
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import signal
from scipy.io import wavfile

from ._validation import SAMPLE_RATE, check_signal
from .exceptions import CorpusError, SilentClipError, UnsupportedAudioError

log = logging.getLogger(__name__)

CLASSES = ("music", "speech", "noise")
DEFAULT_LAYOUT = {c: c for c in CLASSES}

SILENCE_THRESHOLD_DB = -50.0
SILENCE_WINDOW_S = 0.05
MAX_INTERNAL_SILENCE_S = 0.5
MIN_DURATION_S = 8.0

# Kaiser-windowed sinc anti-aliasing filter
_STOPBAND_DB = 100.0
_TRANSITION = 0.1


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer at a fixed rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", check_signal(self.samples, name="samples"))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate

    def with_samples(self, samples):
        return replace(self, samples=samples)


# -- decoding -------------------------------------------------------------


def _to_float(data):
    kind = data.dtype.kind
    if kind == "f":
        return data.astype(np.float64)
    if kind == "i" and data.dtype.itemsize == 2:
        return data.astype(np.float64) / 32768.0
    if kind == "i" and data.dtype.itemsize == 4:
        # 24-bit PCM is delivered left-justified in int32
        return data.astype(np.float64) / 2147483648.0
    raise UnsupportedAudioError(
        f"unsupported sample format {data.dtype} (need 16/24/32-bit int or float PCM)"
    )


@functools.lru_cache(maxsize=32)
def _resampling_filter(up, down):
    ratio = max(up, down)
    numtaps, beta = signal.kaiserord(_STOPBAND_DB, _TRANSITION / ratio)
    numtaps |= 1
    cutoff = (1.0 - _TRANSITION / 2) / ratio
    return signal.firwin(numtaps, cutoff, window=("kaiser", beta))


def resample(x, orig_sr, target_sr=SAMPLE_RATE):
    """Polyphase windowed-sinc rate conversion."""
    if orig_sr == target_sr:
        return np.asarray(x, dtype=np.float64)
    g = math.gcd(int(orig_sr), int(target_sr))
    up, down = target_sr // g, orig_sr // g
    taps = _resampling_filter(up, down)
    return signal.resample_poly(x, up, down, window=taps * up)


def read_wav(path):
    """Decode a WAV file to ``(float samples [n, channels], rate)``."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(str(path))
    except OSError:
        raise
    except Exception as exc:
        # scipy reports malformed headers with assorted exception types
        raise UnsupportedAudioError(f"{path}: cannot decode ({type(exc).__name__}: {exc})") from exc
    data = _to_float(data)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] == 0:
        raise UnsupportedAudioError(f"{path}: no audio frames")
    return data, int(rate)


def decode_and_standardize(path):
    """Decode ``path`` to a 22050 Hz mono :class:`AudioClip`.

    Stereo (or wider) input is downmixed by channel mean. Float input is
    clipped to [-1, 1].
    """
    data, rate = read_wav(path)
    mono = data.mean(axis=1)
    mono = resample(mono, rate, SAMPLE_RATE)
    np.clip(mono, -1.0, 1.0, out=mono)
    return AudioClip(mono, SAMPLE_RATE, str(path))


# -- clip operations --------------------------------------------------------


def _runs(mask):
    """Yield ``(start, stop)`` of consecutive True runs in a boolean array."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return edges[0::2], edges[1::2]


def trim_silence(
    clip,
    threshold_db=SILENCE_THRESHOLD_DB,
    max_internal_silence_s=MAX_INTERNAL_SILENCE_S,
    window_s=SILENCE_WINDOW_S,
):
    """Drop leading/trailing dead air and shorten long internal pauses.

    Silence is decided per non-overlapping ``window_s`` RMS window. Internal
    silent runs keep only their first ``max_internal_silence_s`` seconds.
    """
    x = clip.samples
    win = max(1, round(window_s * clip.sample_rate))
    n_win = -(-len(x) // win)
    padded = np.zeros(n_win * win)
    padded[: len(x)] = x
    counts = np.full(n_win, win, dtype=np.float64)
    counts[-1] = len(x) - (n_win - 1) * win
    rms = np.sqrt((padded.reshape(n_win, win) ** 2).sum(axis=1) / counts)
    silent = rms < 10.0 ** (threshold_db / 20.0)
    if silent.all():
        raise SilentClipError(f"no signal content in {clip.source_id or 'clip'}")

    keep = np.zeros(len(x), dtype=bool)
    voiced = np.flatnonzero(~silent)
    keep[voiced[0] * win : min((voiced[-1] + 1) * win, len(x))] = True
    cap = round(max_internal_silence_s * clip.sample_rate)
    for start, stop in zip(*_runs(silent)):
        if start == 0 or stop == n_win:
            continue
        s, e = start * win, stop * win
        if e - s > cap:
            keep[s + cap : e] = False
    return clip.with_samples(x[keep])


def ensure_min_duration(clip, min_s=MIN_DURATION_S):
    """Loop ``clip`` until it is at least ``min_s`` seconds long."""
    need = round(min_s * clip.sample_rate)
    n = len(clip)
    if n >= need:
        return clip
    return clip.with_samples(np.tile(clip.samples, -(-need // n)))


def random_segment(clip, dur_s, rng, *, return_offset=False):
    """Cut a contiguous ``dur_s`` second segment at a uniform random offset."""
    n = round(dur_s * clip.sample_rate)
    if n < 1:
        raise ValueError(f"segment duration must be positive, got {dur_s}")
    if len(clip) < n:
        raise ValueError(
            f"clip of {clip.duration:.3f} s is shorter than requested {dur_s} s segment"
        )
    offset = int(rng.integers(0, len(clip) - n + 1))
    seg = clip.with_samples(clip.samples[offset : offset + n])
    return (seg, offset) if return_offset else seg


def peak_normalize(clip):
    """Scale so that the largest absolute sample is exactly 1.0."""
    peak = np.max(np.abs(clip.samples))
    if peak == 0:
        raise SilentClipError(f"cannot peak-normalize an all-zero clip {clip.source_id}")
    return clip.with_samples(clip.samples / peak)


def prepare_source(path, min_s=MIN_DURATION_S):
    """Full per-file pre-processing used before segments are drawn."""
    return ensure_min_duration(trim_silence(decode_and_standardize(path)), min_s)


@functools.lru_cache(maxsize=128)
def _cached_source(path, min_s):
    return prepare_source(path, min_s)


# -- corpus index -----------------------------------------------------------


@dataclass(frozen=True)
class CorpusIndex:
    """Per-class file lists relative to ``root`` plus standardized durations."""

    root: Path
    files: Mapping[str, tuple] = field(default_factory=dict)
    durations: Mapping[str, float] = field(default_factory=dict)

    def sizes(self):
        return {c: len(self.files.get(c, ())) for c in CLASSES}

    def check_ready(self):
        for c in CLASSES:
            if not self.files.get(c):
                raise CorpusError(f"corpus class '{c}' has no usable audio files")

    def load(self, rel_path, min_s=MIN_DURATION_S):
        """Decode, trim and loop one indexed file (memoized per process)."""
        return _cached_source(str(self.root / rel_path), min_s)

    def to_json(self):
        return {
            "root": str(self.root),
            "files": {c: list(v) for c, v in self.files.items()},
            "durations": dict(self.durations),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            Path(obj["root"]),
            {c: tuple(v) for c, v in obj["files"].items()},
            {k: float(v) for k, v in obj["durations"].items()},
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True))

    @classmethod
    def load_file(cls, path):
        return cls.from_json(json.loads(Path(path).read_text()))


def _wav_files(directory):
    found = [p for p in directory.rglob("*") if p.is_file() and p.suffix.lower() == ".wav"]
    return sorted(found, key=lambda p: p.relative_to(directory).as_posix())


def index_corpus(root_dir, layout=None):
    """Scan ``root_dir`` for decodable WAVs, one subdirectory per class.

    Files that fail to decode or contain only silence are logged and skipped;
    a class left with no files is fatal.
    """
    root = Path(root_dir)
    layout = dict(DEFAULT_LAYOUT if layout is None else layout)
    if not root.is_dir():
        raise CorpusError(f"corpus root {root} does not exist")
    files, durations = {}, {}
    for cls in CLASSES:
        sub = root / layout.get(cls, cls)
        if not sub.is_dir():
            raise CorpusError(f"corpus is missing the '{cls}' directory ({sub})")
        kept = []
        for path in _wav_files(sub):
            rel = path.relative_to(root).as_posix()
            try:
                clip = trim_silence(decode_and_standardize(path))
            except (UnsupportedAudioError, SilentClipError) as exc:
                log.warning("skipping %s: %s", rel, exc)
                continue
            kept.append(rel)
            durations[rel] = clip.duration
        if not kept:
            raise CorpusError(f"corpus class '{cls}' has no usable audio files in {sub}")
        files[cls] = tuple(kept)
    index = CorpusIndex(root, files, durations)
    log.info("indexed corpus %s: %s", root, index.sizes())
    return index
