import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from radiomix.corpus import AudioClip
from radiomix.exceptions import UnmeasurableError
from radiomix.loudness import (
    REFERENCE_SOS_48K,
    gain_for_target_ld,
    integrated_loudness,
    k_weight,
    k_weighting_sos,
    loudness_difference,
)
from signals import SR, music_like, pink_noise, sine, speech_like

# Independent reference meter (pyloudnorm 0.1.1, Meter(22050)), run once
SINE_997_FULL_SCALE_LUFS = -3.0663813728961156
PINK_NOISE_M20_LUFS = -22.910706623334814


def _response_db(sos, fs, freqs):
    _, h = signal.sosfreqz(sos, worN=np.asarray(freqs, dtype=float), fs=fs)
    with np.errstate(divide="ignore"):
        return 20 * np.log10(np.abs(h))


def test_design_reproduces_tabulated_48k_coefficients():
    np.testing.assert_allclose(k_weighting_sos(48000), REFERENCE_SOS_48K, atol=1e-12)


def test_response_at_1khz_matches_48k_reference():
    ours = _response_db(k_weighting_sos(SR), SR, [1000.0])
    ref = _response_db(REFERENCE_SOS_48K, 48000, [1000.0])
    assert abs(ours[0] - ref[0]) <= 0.1


def test_response_matches_48k_up_to_10khz():
    freqs = np.geomspace(20, 10000, 200)
    diff = _response_db(k_weighting_sos(SR), SR, freqs) - _response_db(REFERENCE_SOS_48K, 48000, freqs)
    assert np.max(np.abs(diff)) <= 0.25


def test_dc_is_rejected():
    assert _response_db(k_weighting_sos(SR), SR, [0.0])[0] < -60
    y = k_weight(np.full(4 * SR, 0.5))
    assert 20 * np.log10(np.max(np.abs(y[-SR:])) / 0.5) < -60


def test_k_weight_linear_and_time_invariant():
    x = np.random.default_rng(0).standard_normal(SR)
    np.testing.assert_allclose(k_weight(0.3 * x), 0.3 * k_weight(x), atol=1e-12)
    shifted = k_weight(np.concatenate([np.zeros(37), x]))
    np.testing.assert_allclose(shifted[37:], k_weight(x), atol=1e-12)


def test_k_weight_on_clip_keeps_metadata():
    clip = AudioClip(np.ones(100), source_id="x")
    assert k_weight(clip).source_id == "x"


def test_silence_is_unmeasurable():
    with pytest.raises(UnmeasurableError):
        integrated_loudness(np.zeros(8 * SR))


def test_too_short_is_unmeasurable():
    with pytest.raises(UnmeasurableError):
        integrated_loudness(np.ones(round(0.39 * SR)))


def test_full_scale_sine_matches_reference():
    assert integrated_loudness(sine(997, 8.0)) == pytest.approx(SINE_997_FULL_SCALE_LUFS, abs=0.1)


def test_pink_noise_matches_reference():
    x = pink_noise(8.0, np.random.default_rng(1770))
    assert integrated_loudness(x) == pytest.approx(PINK_NOISE_M20_LUFS, abs=0.1)


def test_reference_meter_live():
    pyln = pytest.importorskip("pyloudnorm")
    meter = pyln.Meter(SR)
    rng = np.random.default_rng(5)
    for x in (music_like(6, rng), speech_like(6, rng)):
        assert integrated_loudness(x) == pytest.approx(meter.integrated_loudness(x), abs=0.1)


def test_half_amplitude_is_6db_quieter():
    x = music_like(8.0, np.random.default_rng(2))
    assert integrated_loudness(0.5 * x) == pytest.approx(integrated_loudness(x) - 6.0206, abs=0.05)


def test_concatenation_invariance():
    x = pink_noise(4.0, np.random.default_rng(9), rms_dbfs=-18)
    assert integrated_loudness(np.tile(x, 3)) == pytest.approx(integrated_loudness(x), abs=0.2)


def test_gain_arithmetic():
    # equal loudness, target 10 LU -> -10 dB
    x = pink_noise(4.0, np.random.default_rng(0))
    assert gain_for_target_ld(x, x, 10.0) == pytest.approx(10 ** (-10 / 20), rel=1e-12)
    assert gain_for_target_ld(x, x, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_gain_closes_the_loop():
    rng = np.random.default_rng(12)
    s, m = speech_like(8.0, rng), music_like(8.0, rng)
    g = gain_for_target_ld(s, m, 12.0)
    assert 11.5 <= loudness_difference(s, g * m) <= 12.5


def test_unmeasurable_music_propagates():
    with pytest.raises(UnmeasurableError):
        gain_for_target_ld(speech_like(4.0, np.random.default_rng(0)), np.zeros(4 * SR), 10.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 4.0), st.integers(0, 1000))
def test_ld_gain_invariance(g, seed):
    rng = np.random.default_rng(seed)
    s, m = speech_like(4.0, rng), music_like(4.0, rng)
    assert loudness_difference(s, g * m) == pytest.approx(loudness_difference(s, m) - 20 * np.log10(g), abs=0.1)
