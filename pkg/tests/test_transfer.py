import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efrtf.spectral import StftConfig, stft
from efrtf.synth import SynthSystem, broadband_excitation, generate, multitone_bins, multitone_excitation
from efrtf.synthset import resonance_profile
from efrtf.transfer import (
    avg_magnitude,
    excitation_mask,
    log_magnitude_map,
    phase_delay,
    transfer_function,
    wrap_phase,
)
from efrtf.types import TWO_PI, ComplexSpectrogram, SignalRecord

RECT = StftConfig(window_kind="rectangular")


def spec_of(values, fs=200.0, hop=None):
    values = np.atleast_2d(np.asarray(values, dtype=complex))
    m, k = values.shape
    n = 2 * (k - 1)
    hop = hop or n // 2
    return ComplexSpectrogram(values, np.arange(m) * hop / fs, np.arange(k) * fs / n, n, hop)


def random_spec(rng, m=20, k=11):
    return spec_of(rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k)))


def test_identity_and_gain(rng):
    A = random_spec(rng)
    tf, mask = transfer_function(A, A)
    np.testing.assert_allclose(tf.values[tf.valid], 1 + 0j, rtol=0, atol=1e-15)
    tf3, _ = transfer_function(A, spec_of(3 * A.values))
    np.testing.assert_allclose(tf3.values[tf3.valid], 3 + 0j, rtol=1e-15)


def test_mask_rule_exact():
    a = np.array([[10.0, 0.01, 0.0099, 0.0, 5.0]])
    tf, mask = transfer_function(spec_of(a), spec_of(np.ones_like(a)), floor_ratio=1e-3)
    np.testing.assert_array_equal(mask.valid, [[True, True, False, False, True]])
    assert np.all(tf.values[~mask.valid] == 0)
    assert np.all(np.isfinite(tf.values))


def test_all_zero_excitation_is_fully_masked():
    mask = excitation_mask(spec_of(np.zeros((3, 5))))
    assert not mask.valid.any()


def test_shape_mismatch(rng):
    with pytest.raises(ValueError, match="grids differ"):
        transfer_function(random_spec(rng, 20), random_spec(rng, 19))


def test_delay_rectangular_window():
    x = multitone_excitation(60, seed=1, step=1)
    y = generate(SynthSystem.delay(7), x)
    A, E = stft(x, RECT), stft(y, RECT)
    tf, _ = transfer_function(A, E)
    k = multitone_bins(step=1)
    h = tf.values[1:, k]  # frame 0 sees the zero-filled start of the delay
    np.testing.assert_allclose(np.abs(h), 1, atol=1e-9)
    expected = np.exp(-2j * np.pi * k * 7 / 200)
    assert np.abs(np.angle(h / expected)).max() <= 1e-9


@pytest.mark.parametrize("h, expected", [(1, 0.0), (10, 1.0), (0.1 * (1 + 1j), math.log10(0.1 * math.sqrt(2)))])
def test_log_magnitude_values(h, expected):
    A = spec_of(np.ones((2, 3)))
    tf, _ = transfer_function(A, spec_of(np.full((2, 3), h)))
    np.testing.assert_allclose(log_magnitude_map(tf), expected, rtol=1e-12)
    assert round(expected, 4) == pytest.approx(expected, abs=5e-5)


def test_log_magnitude_invalid_is_nan():
    a = np.array([[1.0, 0.0, 1.0]])
    tf, _ = transfer_function(spec_of(a), spec_of(np.ones_like(a)))
    lm = log_magnitude_map(tf)
    assert np.isnan(lm[0, 1]) and lm[0, 0] == 0


def test_avg_magnitude_examples():
    A = spec_of(np.ones((4, 3)))
    tf, _ = transfer_function(A, spec_of(np.full((4, 3), 2 + 0j)))
    np.testing.assert_array_equal(avg_magnitude(tf).values, 2.0)
    alt = np.array([1, 3, 1, 3])[:, None] * np.exp(1j * np.arange(3))
    tf, _ = transfer_function(A, spec_of(alt))
    np.testing.assert_allclose(avg_magnitude(tf).values, 2.0)


def test_avg_magnitude_uses_valid_frames_only():
    a = np.array([[1.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
    e = np.array([[2.0, 5.0], [4.0, 100.0], [6.0, 100.0]])
    tf, _ = transfer_function(spec_of(a), spec_of(e))
    avg = avg_magnitude(tf)
    np.testing.assert_allclose(avg.values, [4.0, 5.0])
    a[:, 1] = 0
    avg = avg_magnitude(transfer_function(spec_of(a), spec_of(e))[0])
    np.testing.assert_array_equal(avg.valid, [True, False])


def test_resonance_profile_peak_location():
    mag, phase = resonance_profile()
    x = broadband_excitation(120, seed=21)
    y = generate(SynthSystem.gain_phase_profile(mag, phase), x)
    tf, _ = transfer_function(stft(x), stft(y))
    avg = avg_magnitude(tf)
    assert abs(avg.bin_freqs_hz[np.argmax(avg.values)] - 11) <= 1


def test_phase_delay_examples(rng):
    A = random_spec(rng)
    mask = excitation_mask(A)
    assert np.all(phase_delay(A, A, mask).values == 0)
    quad = phase_delay(A, spec_of(A.values * 1j), mask)
    np.testing.assert_allclose(quad.values, np.pi / 2, atol=1e-12)


def test_phase_delay_ten_sample_delay():
    # the response lags, so arg E - arg A = -2 pi k D / N (mod 2 pi)
    x = multitone_excitation(120, seed=3)
    y = generate(SynthSystem.delay(10), x)
    A, E = stft(x), stft(y)
    pd = phase_delay(A, E, excitation_mask(A))
    k = multitone_bins()
    expected = np.mod(-2 * np.pi * k * 10 / 200, TWO_PI)
    err = np.abs(np.angle(np.exp(1j * (pd.values[k] - expected))))
    assert err.max() <= 0.05


def test_arithmetic_mean_is_the_default():
    # true phase 0 with frame-to-frame jitter: arithmetic mean lands near pi,
    # the circular mean stays near 0
    m = 200
    jitter = np.where(np.arange(m) % 2 == 0, 0.01, -0.01)
    A = spec_of(np.ones((m, 3)))
    E = spec_of(np.exp(1j * jitter)[:, None] * np.ones((1, 3)))
    mask = excitation_mask(A)
    assert abs(phase_delay(A, E, mask).values[0] - np.pi) < 0.01
    assert phase_delay(A, E, mask, circular=True).values[0] < 1e-9


def test_wrap_phase_range():
    w = wrap_phase(np.array([-1e-17, TWO_PI, -TWO_PI, 7.0, -0.5]))
    assert np.all((w >= 0) & (w < TWO_PI))
    assert w[0] == 0 and w[1] == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_gain_invariance_and_scale_covariance(seed, alpha):
    rng = np.random.default_rng(seed)
    A, E = random_spec(rng), random_spec(rng)
    mask = excitation_mask(A)
    p1 = phase_delay(A, E, mask).values
    p2 = phase_delay(A, spec_of(alpha * E.values), mask).values
    assert np.abs(np.angle(np.exp(1j * (p1 - p2)))).max() <= 1e-10
    m1 = avg_magnitude(transfer_function(A, E)[0]).values
    m2 = avg_magnitude(transfer_function(A, spec_of(alpha * E.values))[0]).values
    np.testing.assert_allclose(m2, alpha * m1, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mask_honesty(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((15, 9)) + 1j * rng.standard_normal((15, 9))
    quiet = rng.random(a.shape) < 0.2
    a[quiet] *= 1e-6
    e = rng.standard_normal(a.shape) + 1j * rng.standard_normal(a.shape)
    A, E = spec_of(a), spec_of(e)
    tf, mask = transfer_function(A, E)
    masked = ~mask.valid
    # perturb masked bins of both inputs, keeping excitation below the floor
    a2 = np.where(masked, a * rng.uniform(0, 1, a.shape) * np.exp(1j * rng.uniform(0, 7, a.shape)), a)
    e2 = np.where(masked, 1e9 * (rng.standard_normal(a.shape) + 1j), e)
    A2, E2 = spec_of(a2), spec_of(e2)
    tf2, mask2 = transfer_function(A2, E2)
    np.testing.assert_array_equal(mask.valid, mask2.valid)
    np.testing.assert_array_equal(tf.values, tf2.values)
    np.testing.assert_array_equal(avg_magnitude(tf).values, avg_magnitude(tf2).values)
    np.testing.assert_array_equal(log_magnitude_map(tf), log_magnitude_map(tf2))
    np.testing.assert_array_equal(phase_delay(A, E, mask).values, phase_delay(A2, E2, mask2).values)


def test_fir_magnitude_oracle():
    x = broadband_excitation(120, seed=17)
    taps = (1.0, 0.5)
    tf, _ = transfer_function(stft(x), stft(generate(SynthSystem.fir(taps), x)))
    avg = avg_magnitude(tf)
    g = np.abs(SynthSystem.fir(taps).response(avg.bin_freqs_hz))
    rel = (avg.values[avg.valid] - g[avg.valid]) / g[avg.valid]
    assert np.sqrt(np.mean(rel**2)) <= 0.05
