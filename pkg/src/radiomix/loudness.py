"""ITU-R BS.1770-4 integrated loudness and ducking gain.

The standard tabulates K-weighting coefficients at 48 kHz only. Both stages
are re-derived here by bilinear transform (with frequency pre-warping) of
the analog prototypes that reproduce the tabulated filters, so the meter runs
natively at the pipeline rate.
"""

from __future__ import annotations

import functools

import numpy as np
from scipy import signal

from ._validation import SAMPLE_RATE, check_signal
from .corpus import AudioClip
from .exceptions import UnmeasurableError

BLOCK_S = 0.4
OVERLAP = 0.75
ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = -10.0
LUFS_OFFSET = -0.691

# Analog prototypes matching the tabulated 48 kHz filters
_SHELF_F0 = 1681.974450955533
_SHELF_GAIN_DB = 3.999843853973347
_SHELF_Q = 0.7071752369554196
_SHELF_VB_EXP = 0.4996667741545416
_HP_F0 = 38.13547087602444
_HP_Q = 0.5003270373238773

# BS.1770-4 Table 1 / Table 2 (48 kHz), used as the design reference
REFERENCE_SOS_48K = np.array(
    [
        [1.53512485958697, -2.69169618940638, 1.19839281085285, 1.0, -1.69065929318241, 0.73248077421585],
        [1.0, -2.0, 1.0, 1.0, -1.99004745483398, 0.99007225036621],
    ]
)


def _hp_a0(fs):
    k = np.tan(np.pi * _HP_F0 / fs)
    return 1.0 + k / _HP_Q + k * k


@functools.lru_cache(maxsize=8)
def _k_weighting_sos(fs):
    k = np.tan(np.pi * _SHELF_F0 / fs)
    vh = 10.0 ** (_SHELF_GAIN_DB / 20.0)
    vb = vh**_SHELF_VB_EXP
    a0 = 1.0 + k / _SHELF_Q + k * k
    shelf = [
        (vh + vb * k / _SHELF_Q + k * k) / a0,
        2.0 * (k * k - vh) / a0,
        (vh - vb * k / _SHELF_Q + k * k) / a0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / _SHELF_Q + k * k) / a0,
    ]

    k = np.tan(np.pi * _HP_F0 / fs)
    a0 = _hp_a0(fs)
    # the tabulated high-pass keeps an unnormalized [1, -2, 1] numerator;
    # carry its 48 kHz passband gain over to other rates
    g = _hp_a0(48000) / a0
    highpass = [g, -2.0 * g, g, 1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / _HP_Q + k * k) / a0]
    return np.array([shelf, highpass])


def k_weighting_sos(fs=SAMPLE_RATE):
    """Second-order sections ``[shelf, high-pass]`` for sample rate ``fs``."""
    return _k_weighting_sos(int(fs)).copy()


def k_weight(clip):
    """Apply the two K-weighting stages (pre-filter shelf, then RLB high-pass)."""
    x = clip.samples if isinstance(clip, AudioClip) else check_signal(clip)
    fs = clip.sample_rate if isinstance(clip, AudioClip) else SAMPLE_RATE
    y = signal.sosfilt(k_weighting_sos(fs), x)
    return clip.with_samples(y) if isinstance(clip, AudioClip) else y


def block_energies(x, fs=SAMPLE_RATE):
    """Mean square of the K-weighted signal over gating blocks (400 ms, 75% overlap)."""
    y = signal.sosfilt(k_weighting_sos(fs), x)
    block = round(BLOCK_S * fs)
    hop = round(BLOCK_S * (1.0 - OVERLAP) * fs)
    if len(y) < block:
        return np.empty(0)
    n_blocks = (len(y) - block) // hop + 1
    csum = np.concatenate(([0.0], np.cumsum(y * y)))
    starts = np.arange(n_blocks) * hop
    return (csum[starts + block] - csum[starts]) / block


def _lufs(z):
    with np.errstate(divide="ignore"):
        return LUFS_OFFSET + 10.0 * np.log10(z)


def integrated_loudness(clip, fs=SAMPLE_RATE):
    """Gated integrated loudness in LUFS.

    Raises :class:`UnmeasurableError` when no block clears the -70 LUFS
    absolute gate (digital silence, or clips shorter than one block).
    """
    if isinstance(clip, AudioClip):
        x, fs = clip.samples, clip.sample_rate
    else:
        x = check_signal(clip)
    z = block_energies(x, fs)
    if z.size == 0:
        raise UnmeasurableError(f"need at least {BLOCK_S} s of audio to measure loudness")
    lj = _lufs(z)
    above_abs = z[lj > ABSOLUTE_GATE_LUFS]
    if above_abs.size == 0:
        raise UnmeasurableError("unmeasurable: no block above the absolute gate")
    rel_gate = _lufs(above_abs.mean()) + RELATIVE_GATE_LU
    gated = z[(lj > ABSOLUTE_GATE_LUFS) & (lj > rel_gate)]
    return float(_lufs(gated.mean()))


def loudness_difference(speech, music):
    """Speech minus music integrated loudness, over their common length."""
    n = min(len(speech), len(music))
    s = speech.samples[:n] if isinstance(speech, AudioClip) else check_signal(speech)[:n]
    m = music.samples[:n] if isinstance(music, AudioClip) else check_signal(music)[:n]
    return integrated_loudness(s) - integrated_loudness(m)


def gain_for_target_ld(speech, music, target_ld):
    """Linear gain that puts ``music`` ``target_ld`` LU below ``speech``."""
    return float(10.0 ** ((loudness_difference(speech, music) - target_ld) / 20.0))
