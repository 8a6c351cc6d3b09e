import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radiomix.corpus import AudioClip
from radiomix.fades import FadeCurve, FadeSpec, apply_fade, fade_envelope, fade_gain

CURVES = list(FadeCurve)


@pytest.mark.parametrize("curve", CURVES)
def test_endpoints_exact(curve):
    assert fade_gain(curve, 0.0) == 0.0
    assert fade_gain(curve, 1.0) == 1.0


@pytest.mark.parametrize("curve", CURVES)
def test_monotone_on_fine_grid(curve):
    g = fade_gain(curve, np.linspace(0, 1, 10_001))
    assert np.all(np.diff(g) >= 0)
    assert g.min() >= 0 and g.max() <= 1


def test_curve_shapes():
    t = np.linspace(0.01, 0.99, 99)
    convex, concave = fade_gain("exp_convex", t), fade_gain("exp_concave", t)
    assert np.all(convex < t) and np.all(concave > t)
    s = fade_gain("s_curve", t)
    assert fade_gain("s_curve", 0.5) == pytest.approx(0.5)
    assert np.all(s[t < 0.5] < t[t < 0.5]) and np.all(s[t > 0.5] > t[t > 0.5])


def test_known_values():
    assert fade_gain("exp_convex", 0.5) == pytest.approx(np.expm1(1.5) / np.expm1(3.0))
    assert fade_gain("exp_concave", 0.5) == pytest.approx(np.expm1(-1.5) / np.expm1(-3.0))
    assert fade_gain("linear", 0.25) == 0.25


def test_time_outside_unit_interval():
    with pytest.raises(ValueError):
        fade_gain("linear", 1.5)
    with pytest.raises(ValueError):
        fade_gain("linear", np.array([0.2, -0.1]))


def test_unknown_curve():
    with pytest.raises(ValueError):
        fade_gain("cosine", 0.5)


@pytest.mark.parametrize("curve", CURVES)
def test_envelope_directions(curve):
    up = fade_envelope(curve, 11, "in")
    down = fade_envelope(curve, 11, "out")
    assert up[0] == 0.0 and up[-1] == 1.0
    assert down[0] == 1.0 and down[-1] == 0.0
    np.testing.assert_allclose(down, fade_gain(curve, 1 - np.arange(11) / 10))


def test_degenerate_ramp_is_noop():
    np.testing.assert_array_equal(fade_envelope("linear", 1), [1.0])
    assert fade_envelope("linear", 0).size == 0


def test_apply_fade_multiplies_head():
    x = np.full(100, 0.5)
    out = apply_fade(AudioClip(x, 100), FadeSpec("linear", 0.2, "in"))
    np.testing.assert_allclose(out.samples[:20], 0.5 * np.arange(20) / 19)
    np.testing.assert_array_equal(out.samples[20:], x[20:])


def test_apply_fade_out_tail():
    x = np.ones(50)
    out = apply_fade(AudioClip(x, 10), FadeSpec("s_curve", 1.0, "out"))
    np.testing.assert_allclose(out.samples[-10:], fade_envelope("s_curve", 10, "out"))
    assert out.samples[-1] == 0.0


def test_apply_fade_too_long():
    with pytest.raises(ValueError, match="exceeds"):
        apply_fade(AudioClip(np.ones(10), 10), FadeSpec("linear", 2.0))


def test_fade_spec_validation():
    with pytest.raises(ValueError):
        FadeSpec("linear", -1.0)
    with pytest.raises(ValueError):
        FadeSpec("linear", 1.0, "sideways")
    assert FadeSpec("linear", 0.5).to_json() == {"curve": "linear", "duration_s": 0.5, "direction": "in"}


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from(CURVES),
    st.sampled_from(["in", "out"]),
    st.integers(0, 400),
    st.integers(0, 2**32 - 1),
)
def test_fade_never_amplifies(curve, direction, n, seed):
    x = np.random.default_rng(seed).uniform(-1, 1, 400)
    out = apply_fade(AudioClip(x, 100), FadeSpec(curve, n / 100, direction))
    assert np.all(np.abs(out.samples) <= np.abs(x))


def test_full_clip_linear_fade_out():
    n = 1000
    out = apply_fade(AudioClip(np.ones(n), 1000), FadeSpec("linear", 1.0, "out"))
    t = np.arange(n) / n
    assert np.max(np.abs(out.samples - (1 - t))) <= 1.0 / (n - 1)


def test_zero_duration_is_identity():
    x = np.random.default_rng(0).uniform(-1, 1, 50)
    out = apply_fade(AudioClip(x, 100), FadeSpec("exp_concave", 0.0))
    np.testing.assert_array_equal(out.samples, x)


@pytest.mark.parametrize("curve", CURVES)
def test_fade_in_then_out_is_envelope_product(curve):
    n = 257
    clip = AudioClip(np.full(n, 0.8), 1000)
    spec_in, spec_out = FadeSpec(curve, n / 1000, "in"), FadeSpec(curve, n / 1000, "out")
    out = apply_fade(apply_fade(clip, spec_in), spec_out)
    t = np.arange(n) / (n - 1)
    expected = 0.8 * np.array([fade_gain(curve, ti) * fade_gain(curve, 1 - ti) for ti in t])
    np.testing.assert_allclose(out.samples, expected, rtol=1e-12, atol=1e-15)
