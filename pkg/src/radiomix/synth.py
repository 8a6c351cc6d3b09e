"""Radio-style example synthesis.

An example is planned first (states, transition geometry, bed levels), then
rendered from random corpus segments. Planning and source drawing use
separate rng substreams so that a redraw after an unusable segment never
changes the plan and therefore never skews the class balance.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import SAMPLE_RATE
from .corpus import AudioClip, CorpusIndex, index_corpus, peak_normalize, random_segment
from .exceptions import SilentClipError, SynthesisError, UnmeasurableError
from .fades import EXP_SHARPNESS, FadeCurve, FadeSpec, fade_envelope
from .labels import LABELS, EventList, write_annotations
from .loudness import gain_for_target_ld

log = logging.getLogger(__name__)

EXAMPLE_S = 8.0
EXAMPLE_SAMPLES = round(EXAMPLE_S * SAMPLE_RATE)

BED = "speech_over_music"
STATES = ("music", "speech", "noise", BED)
STATE_SOURCES = {"music": ("music",), "speech": ("speech",), "noise": ("noise",), BED: ("speech", "music")}
VARIANTS = ("d-OF", "d-OFB", "d-NN", "d-DS")
TRANSITION_KINDS = ("normal", "crossfade")

# rng substream tags
_PLAN_STREAM = 0
_SOURCE_STREAM = 1


@dataclass(frozen=True)
class VariantConfig:
    """Dataset variant and the randomization ranges of the synthesis."""

    variant: str = "d-DS"
    ld_range: tuple = (7.0, 18.0)
    p_transition: float = 0.5
    max_gap_s: float = 2.0
    transition_window: tuple = (1.5, 6.5)
    bed_gain_range: tuple = (0.1, 1.0)
    exp_sharpness: float = EXP_SHARPNESS
    max_attempts: int = 10

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        object.__setattr__(self, "ld_range", tuple(float(v) for v in self.ld_range))
        object.__setattr__(self, "transition_window", tuple(float(v) for v in self.transition_window))
        object.__setattr__(self, "bed_gain_range", tuple(float(v) for v in self.bed_gain_range))
        lo, hi = self.ld_range
        if not lo <= hi:
            raise ValueError(f"ld_range must be ordered, got {self.ld_range}")
        if not 0.0 <= self.p_transition <= 1.0:
            raise ValueError(f"p_transition must be a probability, got {self.p_transition}")
        w0, w1 = self.transition_window
        half_gap = self.max_gap_s / 2
        if not (self.max_gap_s >= 0 and 0 < w0 - half_gap and w0 <= w1 and w1 + half_gap < EXAMPLE_S):
            raise ValueError("transition window and max gap must keep both sides inside the example")
        g0, g1 = self.bed_gain_range
        if not 0 < g0 <= g1 <= 1:
            raise ValueError(f"bed_gain_range must lie in (0, 1], got {self.bed_gain_range}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")

    @property
    def states(self):
        return STATES[:3] if self.variant == "d-OF" else STATES

    @property
    def allows_transitions(self):
        return self.variant in ("d-NN", "d-DS")

    @property
    def loudness_ducking(self):
        return self.variant != "d-NN"

    def to_json(self):
        return asdict(self)


@dataclass(frozen=True)
class TransitionSpec:
    """Geometry of a two-state transition.

    For ``normal`` transitions ``t_transition`` is where the outgoing event
    ends and ``gap_s`` of digital silence follows. For ``crossfade`` it is
    the center of the overlap, whose length equals the shared fade duration.
    """

    kind: str
    t_transition: float
    fade_out: FadeSpec
    fade_in: FadeSpec
    gap_s: float = 0.0

    def to_json(self):
        return {
            "kind": self.kind,
            "t_transition": self.t_transition,
            "fade_out": self.fade_out.to_json(),
            "fade_in": self.fade_in.to_json(),
            "gap_s": self.gap_s,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            obj["kind"],
            obj["t_transition"],
            FadeSpec(**obj["fade_out"]),
            FadeSpec(**obj["fade_in"]),
            obj["gap_s"],
        )


@dataclass(frozen=True)
class ExamplePlan:
    states: tuple
    transition: TransitionSpec | None = None
    # per state: target LD (ducked variants) or bed peak gain (d-NN); None if no bed
    bed_levels: tuple = ()

    def to_json(self):
        return {
            "states": list(self.states),
            "transition": None if self.transition is None else self.transition.to_json(),
            "bed_levels": list(self.bed_levels),
        }

    @classmethod
    def from_json(cls, obj):
        tr = obj["transition"]
        return cls(
            tuple(obj["states"]),
            None if tr is None else TransitionSpec.from_json(tr),
            tuple(obj["bed_levels"]),
        )


@dataclass(frozen=True)
class Layer:
    """One source placed in an example: ``gain * envelope * segment``."""

    label: str
    source: str
    offset: int
    gain: float
    envelope: np.ndarray = field(repr=False)


@dataclass
class SynthExample:
    audio: AudioClip
    events: EventList
    meta: dict
    layers: tuple = field(default=(), repr=False)


def example_rng(master_seed, index, stream, attempt=0):
    """Independent generator for one (example, purpose, attempt) triple."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index), stream, attempt))
    return np.random.default_rng(ss)


# -- planning ---------------------------------------------------------------


def choose_example_plan(cfg, rng):
    """Draw every random decision of one example except the source material."""
    states = cfg.states
    transition = None
    if cfg.allows_transitions and rng.random() < cfg.p_transition:
        picks = rng.integers(len(states), size=2)
        chosen = (states[picks[0]], states[picks[1]])
        kind = TRANSITION_KINDS[rng.integers(len(TRANSITION_KINDS))]
        curve = list(FadeCurve)[rng.integers(len(FadeCurve))]
        mid = rng.uniform(*cfg.transition_window)
        if kind == "normal":
            gap = rng.uniform(0.0, cfg.max_gap_s)
            a_end, b_start = mid - gap / 2, mid + gap / 2
            d_out = rng.uniform(0.0, a_end)
            d_in = rng.uniform(0.0, EXAMPLE_S - b_start)
            transition = TransitionSpec(
                kind, a_end, FadeSpec(curve, d_out, "out"), FadeSpec(curve, d_in, "in"), gap
            )
        else:
            d = rng.uniform(0.0, 2.0 * min(mid, EXAMPLE_S - mid))
            transition = TransitionSpec(kind, mid, FadeSpec(curve, d, "out"), FadeSpec(curve, d, "in"))
    else:
        chosen = (states[rng.integers(len(states))],)

    levels = []
    for state in chosen:
        if state != BED:
            levels.append(None)
        elif cfg.loudness_ducking:
            levels.append(float(rng.uniform(*cfg.ld_range)))
        else:
            levels.append(float(rng.uniform(*cfg.bed_gain_range)))
    return ExamplePlan(chosen, transition, tuple(levels))


# -- rendering --------------------------------------------------------------


def transition_envelopes(spec, n=EXAMPLE_SAMPLES, sample_rate=SAMPLE_RATE, sharpness=EXP_SHARPNESS):
    """Full-length gain envelopes ``(outgoing, incoming)`` for ``spec``."""
    env_a, env_b = np.zeros(n), np.zeros(n)
    n_out = spec.fade_out.n_samples(sample_rate)
    n_in = spec.fade_in.n_samples(sample_rate)
    if spec.kind == "normal":
        if spec.gap_s < 0:
            raise ValueError("gap must be non-negative")
        a_end = round(spec.t_transition * sample_rate)
        b_start = round((spec.t_transition + spec.gap_s) * sample_rate)
        if not (0 < a_end <= b_start < n) or n_out > a_end or n_in > n - b_start:
            raise ValueError(f"transition extents exceed the {n / sample_rate:g} s example: {spec}")
        env_a[:a_end] = 1.0
        env_a[a_end - n_out : a_end] = fade_envelope(spec.fade_out.curve, n_out, "out", sharpness)
        env_b[b_start:] = 1.0
        env_b[b_start : b_start + n_in] = fade_envelope(spec.fade_in.curve, n_in, "in", sharpness)
    elif spec.kind == "crossfade":
        if n_out != n_in:
            raise ValueError("crossfade fades must share one duration")
        start = round(spec.t_transition * sample_rate) - n_out // 2
        if start < -1 or start + n_out > n + 1 or not 0 < spec.t_transition < n / sample_rate:
            raise ValueError(f"transition extents exceed the {n / sample_rate:g} s example: {spec}")
        start = min(max(start, 0), n - n_out)
        env_a[:start] = 1.0
        env_a[start : start + n_out] = fade_envelope(spec.fade_out.curve, n_out, "out", sharpness)
        env_b[start : start + n_out] = fade_envelope(spec.fade_in.curve, n_in, "in", sharpness)
        env_b[start + n_out :] = 1.0
    else:
        raise ValueError(f"unknown transition kind {spec.kind!r}")
    return env_a, env_b


def plan_envelopes(plan, n=EXAMPLE_SAMPLES, sample_rate=SAMPLE_RATE, sharpness=EXP_SHARPNESS):
    if plan.transition is None:
        return (np.ones(n),)
    return transition_envelopes(plan.transition, n, sample_rate, sharpness)


def _samples(x, n):
    arr = x.samples if isinstance(x, AudioClip) else np.asarray(x, dtype=np.float64)
    if len(arr) < n:
        raise ValueError(f"need {n} samples of source material, got {len(arr)}")
    return arr[:n]


def render_transition(a, b, spec, sharpness=EXP_SHARPNESS):
    """Mix two clips through ``spec`` into one 8 s clip (not normalized)."""
    env_a, env_b = transition_envelopes(spec, sharpness=sharpness)
    n = EXAMPLE_SAMPLES
    return AudioClip(_samples(a, n) * env_a + _samples(b, n) * env_b)


def duck(speech, music, ld):
    """Return ``(scaled music samples, gain)`` sitting ``ld`` LU under ``speech``."""
    gain = gain_for_target_ld(speech, music, ld)
    m = music.samples if isinstance(music, AudioClip) else np.asarray(music, dtype=np.float64)
    return m * gain, gain


def render_ducked_bed(speech, music, ld):
    """Speech over background music ducked to loudness difference ``ld``."""
    if len(speech) != len(music):
        raise ValueError("speech and music must have equal length")
    bed, _ = duck(speech, music, ld)
    s = speech.samples if isinstance(speech, AudioClip) else np.asarray(speech, dtype=np.float64)
    return AudioClip(s + bed)


def events_from_layers(layers, sample_rate=SAMPLE_RATE):
    """Class activity wherever a music/speech layer has nonzero gain, to 1 ms."""
    events = []
    for layer in layers:
        if layer.label not in LABELS or layer.gain <= 0:
            continue
        nz = np.flatnonzero(layer.envelope)
        if nz.size:
            events.append((nz[0] / sample_rate, (nz[-1] + 1) / sample_rate, layer.label))
    return EventList(events).rounded(3)


def render_plan(plan, sources, cfg):
    """Render ``plan`` from per-state source segments.

    ``sources`` holds, per state, a list of ``(label, path, offset, segment)``
    with peak-normalized segments. Returns ``(audio, layers, meta_extras)``.
    """
    n = EXAMPLE_SAMPLES
    envs = plan_envelopes(plan, n, sharpness=cfg.exp_sharpness)
    layers, lds, gains = [], [], []
    for state, env, srcs, level in zip(plan.states, envs, sources, plan.bed_levels):
        if state == BED:
            (_, sp_path, sp_off, speech), (_, mu_path, mu_off, music) = srcs
            if cfg.loudness_ducking:
                # LD holds for the stems as heard: faded, over the audible region
                nz = np.flatnonzero(env)
                region = slice(nz[0], nz[-1] + 1)
                w = env[region]
                gain = gain_for_target_ld(w * speech.samples[region], w * music.samples[region], level)
                lds.append(level)
            else:
                gain = level
                lds.append(None)
            gains.append(gain)
            layers.append(Layer("speech", sp_path, sp_off, 1.0, env))
            layers.append(Layer("music", mu_path, mu_off, gain, env))
        else:
            ((label, path, off, _),) = srcs
            layers.append(Layer(label, path, off, 1.0, env))
            lds.append(None)
            gains.append(None)

    segments = [seg for srcs in sources for (_, _, _, seg) in srcs]
    mix = np.zeros(n)
    for layer, seg in zip(layers, segments):
        mix += layer.gain * layer.envelope * seg.samples[:n]
    audio = peak_normalize(AudioClip(mix, source_id="mix"))
    return audio, tuple(layers), {"ld": lds, "bed_gain": gains}


def draw_sources(plan, corpus, rng):
    """Pick a random file and random 8 s segment for every layer of ``plan``."""
    sources = []
    for state in plan.states:
        picked = []
        for label in STATE_SOURCES[state]:
            files = corpus.files[label]
            path = files[rng.integers(len(files))]
            clip = corpus.load(path, EXAMPLE_S)
            seg, off = random_segment(clip, EXAMPLE_S, rng, return_offset=True)
            picked.append((label, path, off, peak_normalize(seg)))
        sources.append(picked)
    return sources


def _meta(cfg, index, master_seed, attempt, plan, sources, extras):
    return {
        "index": int(index),
        "variant": cfg.variant,
        "seed": int(master_seed),
        "attempt": attempt,
        "classes": list(plan.states),
        "transition": None if plan.transition is None else plan.transition.to_json(),
        "ld": extras["ld"],
        "bed_gain": extras["bed_gain"],
        "plan": plan.to_json(),
        "sources": [
            {"class": label, "path": path, "offset": int(off)}
            for srcs in sources
            for (label, path, off, _) in srcs
        ],
    }


def synthesize_example(cfg, index, master_seed, corpus):
    """Build example ``index`` of the dataset seeded by ``master_seed``."""
    plan = choose_example_plan(cfg, example_rng(master_seed, index, _PLAN_STREAM))
    last_error = None
    for attempt in range(cfg.max_attempts):
        rng = example_rng(master_seed, index, _SOURCE_STREAM, attempt)
        try:
            sources = draw_sources(plan, corpus, rng)
            audio, layers, extras = render_plan(plan, sources, cfg)
        except (SilentClipError, UnmeasurableError) as exc:
            log.debug("example %d attempt %d redrawn: %s", index, attempt, exc)
            last_error = exc
            continue
        meta = _meta(cfg, index, master_seed, attempt, plan, sources, extras)
        return SynthExample(audio, events_from_layers(layers), meta, layers)
    raise SynthesisError(
        f"example {index}: no usable sources after {cfg.max_attempts} attempts ({last_error})"
    )


def resynthesize(meta, corpus, cfg=None):
    """Re-render an example from its manifest record alone."""
    cfg = cfg or VariantConfig(variant=meta["variant"])
    plan = ExamplePlan.from_json(meta["plan"])
    records = iter(meta["sources"])
    sources = []
    for state in plan.states:
        picked = []
        for label in STATE_SOURCES[state]:
            rec = next(records)
            clip = corpus.load(rec["path"], EXAMPLE_S)
            seg = clip.samples[rec["offset"] : rec["offset"] + EXAMPLE_SAMPLES]
            picked.append((label, rec["path"], rec["offset"], peak_normalize(clip.with_samples(seg))))
        sources.append(picked)
    audio, layers, _ = render_plan(plan, sources, cfg)
    return SynthExample(audio, events_from_layers(layers), dict(meta), layers)


# -- dataset output ---------------------------------------------------------


def to_pcm16(x):
    return np.round(np.clip(x, -1.0, 1.0) * 32767.0).astype("<i2")


def _atomic_write(path, writer):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_example(example, out_dir):
    stem = f"ex_{example.meta['index']:06d}"
    out_dir = Path(out_dir)
    _atomic_write(
        out_dir / f"{stem}.wav",
        lambda p: wavfile.write(p, example.audio.sample_rate, to_pcm16(example.audio.samples)),
    )
    _atomic_write(out_dir / f"{stem}.tsv", lambda p: write_annotations(p, example.events))
    return stem


def _generate_one(args):
    cfg, index, master_seed, corpus, out_dir = args
    example = synthesize_example(cfg, index, master_seed, corpus)
    write_example(example, out_dir)
    return example.meta


def generate_dataset(cfg, count, master_seed, out_dir, corpus, workers=1, run_config=None):
    """Write ``count`` WAV/TSV pairs plus ``manifest.jsonl`` to ``out_dir``.

    Output bytes depend only on ``(cfg, master_seed, count)``; ``workers``
    changes wall time, never content.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus.check_ready()
    jobs = [(cfg, i, master_seed, corpus, out_dir) for i in range(count)]
    try:
        if workers > 1 and count > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                metas = list(pool.map(_generate_one, jobs, chunksize=max(1, count // (4 * workers))))
        else:
            metas = [_generate_one(job) for job in jobs]
        run = {"config": run_config or {}, "variant_config": cfg.to_json(), "count": count, "seed": master_seed}
        _atomic_write(
            out_dir / "run.json",
            lambda p: Path(p).write_text(json.dumps(run, indent=1, sort_keys=True) + "\n"),
        )
        lines = "".join(json.dumps(m, sort_keys=True) + "\n" for m in sorted(metas, key=lambda m: m["index"]))
        _atomic_write(out_dir / "manifest.jsonl", lambda p: Path(p).write_text(lines))
    except OSError:
        log.error("I/O failure while writing %s; directory may hold partial output", out_dir)
        raise
    log.info("wrote %d examples to %s", count, out_dir)
    return metas


class RadioMixSynthesizer(BaseEstimator):
    """Estimator-style front end: ``fit`` indexes a corpus, ``sample`` draws examples.

    Parameters
    ----------
    variant : {"d-OF", "d-OFB", "d-NN", "d-DS"}
    ld_min, ld_max : float
        Range of the speech-over-music loudness difference in LU.
    p_transition : float
        Probability that an example holds one transition.
    max_gap_s : float
        Longest silence between events of a normal transition.
    seed : int
        Master seed; example ``i`` depends only on ``(seed, i)``.
    """

    def __init__(self, variant="d-DS", ld_min=7.0, ld_max=18.0, p_transition=0.5, max_gap_s=2.0, seed=0):
        self.variant = variant
        self.ld_min = ld_min
        self.ld_max = ld_max
        self.p_transition = p_transition
        self.max_gap_s = max_gap_s
        self.seed = seed

    def _config(self):
        return VariantConfig(
            variant=self.variant,
            ld_range=(self.ld_min, self.ld_max),
            p_transition=self.p_transition,
            max_gap_s=self.max_gap_s,
        )

    def fit(self, X, y=None):
        """``X`` is a corpus root directory or a prebuilt :class:`CorpusIndex`."""
        self.config_ = self._config()
        self.corpus_index_ = X if isinstance(X, CorpusIndex) else index_corpus(X)
        self.corpus_index_.check_ready()
        return self

    def sample(self, index):
        check_is_fitted(self, "corpus_index_")
        return synthesize_example(self.config_, index, self.seed, self.corpus_index_)

    def generate(self, count, out_dir, workers=1):
        check_is_fitted(self, "corpus_index_")
        return generate_dataset(
            self.config_, count, self.seed, out_dir, self.corpus_index_, workers, self.get_params()
        )
