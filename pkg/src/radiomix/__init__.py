"""Synthetic radio-broadcast audio for music/speech segmentation.

Builds annotated 8 s examples from music, speech and noise corpora with
DJ-style fades, cross-fades and loudness-ducked background music, and
provides the log-Mel features, post-processing and segment-based metrics
used to train and score segmentation models on them.
"""

__version__ = "0.1.0"

from .corpus import (
    AudioClip,
    CorpusIndex,
    decode_and_standardize,
    ensure_min_duration,
    index_corpus,
    peak_normalize,
    random_segment,
    trim_silence,
)
from .evaluation import SegmentMetrics, evaluate_run, segment_metrics
from .fades import FadeCurve, FadeSpec, apply_fade, fade_gain
from .features import LogMelSpectrogram, mel_spectrogram
from .labels import Event, EventList, events_to_frames, frames_to_events, read_annotations, write_annotations
from .loudness import gain_for_target_ld, integrated_loudness, k_weight
from .postproc import SegmentPostProcessor, SmoothingConfig, smooth_events, stitch_windows, threshold_probs
from .synth import (
    RadioMixSynthesizer,
    SynthExample,
    TransitionSpec,
    VariantConfig,
    choose_example_plan,
    generate_dataset,
    render_ducked_bed,
    render_transition,
    synthesize_example,
)

__all__ = [
    "AudioClip", "CorpusIndex", "decode_and_standardize", "ensure_min_duration", "index_corpus",
    "peak_normalize", "random_segment", "trim_silence", "SegmentMetrics", "evaluate_run",
    "segment_metrics", "FadeCurve", "FadeSpec", "apply_fade", "fade_gain", "LogMelSpectrogram",
    "mel_spectrogram", "Event", "EventList", "events_to_frames", "frames_to_events",
    "read_annotations", "write_annotations", "gain_for_target_ld", "integrated_loudness",
    "k_weight", "SegmentPostProcessor", "SmoothingConfig", "smooth_events", "stitch_windows",
    "threshold_probs", "RadioMixSynthesizer", "SynthExample", "TransitionSpec", "VariantConfig",
    "choose_example_plan", "generate_dataset", "render_ducked_bed", "render_transition",
    "synthesize_example",
]
