import numpy as np
import pytest
import scipy.signal

from efrtf.envelope import extract_envelope
from efrtf.ingest import load_audio, load_eeg, load_manifest
from efrtf.spectral import StftConfig, stft
from efrtf.synth import (
    SynthSystem,
    broadband_excitation,
    generate,
    multitone_bins,
    multitone_excitation,
)
from efrtf.synthset import identity_factory, resonator_taps, synthetic_stimulus, write_synthetic_dataset
from efrtf.types import SignalRecord


@pytest.fixture(scope="module")
def noise():
    return broadband_excitation(120, seed=7)


def test_broadband_length_and_rms(noise):
    assert len(noise) == 24000 and noise.sample_rate_hz == 200
    assert abs(np.sqrt(np.mean(noise.samples**2)) - 1) <= 0.01


def test_broadband_determinism(noise):
    np.testing.assert_array_equal(broadband_excitation(120, seed=7).samples, noise.samples)
    other = broadband_excitation(120, seed=8).samples
    assert abs(np.corrcoef(noise.samples, other)[0, 1]) < 0.05


def test_broadband_minimum_duration():
    with pytest.raises(ValueError):
        broadband_excitation(9.9, seed=0)


def test_identity_and_gain_exact(noise):
    np.testing.assert_array_equal(generate(SynthSystem.identity(), noise).samples, noise.samples)
    np.testing.assert_array_equal(generate(SynthSystem.gain(3), noise).samples, 3 * noise.samples)


def test_system_validation():
    with pytest.raises(ValueError):
        SynthSystem.gain(0)
    with pytest.raises(ValueError):
        SynthSystem.delay(100)
    with pytest.raises(ValueError):
        SynthSystem.identity(noise_rms=-1)
    with pytest.raises(ValueError):
        SynthSystem.time_varying([(1.0, [1.0])])


def test_delay_and_causal_fir_match_lfilter(noise):
    x = noise.samples
    d = generate(SynthSystem.delay(4), noise).samples
    np.testing.assert_array_equal(d[4:], x[:-4])
    taps = [0.5, -0.2, 0.1]
    np.testing.assert_allclose(generate(SynthSystem.fir(taps), noise).samples,
                               scipy.signal.lfilter(taps, 1, x), atol=1e-12)


def test_noncausal_fir_origin(noise):
    taps, origin = [0.25, 1.0, 0.25], 1
    y = generate(SynthSystem.fir(taps, origin), noise).samples
    x = noise.samples
    np.testing.assert_allclose(y[1:-1], 0.25 * x[2:] + x[1:-1] + 0.25 * x[:-2], atol=1e-12)


def test_fir_response_matches_freqz():
    taps = [0.3, -0.7, 0.2]
    f = np.arange(101.0)
    _, h = scipy.signal.freqz(taps, worN=f, fs=200)
    np.testing.assert_allclose(SynthSystem.fir(taps).response(f), h, atol=1e-12)
    np.testing.assert_allclose(SynthSystem.fir(taps, 1).response(f), h * np.exp(2j * np.pi * f / 200), atol=1e-12)


def test_profile_system(noise):
    flat = SynthSystem.gain_phase_profile([2.0, 2.0], [0.0, 0.0])
    np.testing.assert_allclose(generate(flat, noise).samples, 2 * noise.samples, atol=1e-12)


def test_time_varying_segments(noise):
    a, b = [1.0], [0.5, 0.5]
    y = generate(SynthSystem.time_varying([(0.0, a), (60.0, b)]), noise).samples
    x = noise.samples
    np.testing.assert_array_equal(y[:12000], x[:12000])
    np.testing.assert_allclose(y[12000:], 0.5 * x[12000:] + 0.5 * x[11999:-1], atol=1e-15)
    with pytest.raises(ValueError):
        SynthSystem.time_varying([(0.0, a)]).response([1.0])


def test_sensor_noise_seeded(noise):
    s = SynthSystem.identity(noise_rms=0.1, seed=4)
    y1, y2 = generate(s, noise).samples, generate(s, noise).samples
    np.testing.assert_array_equal(y1, y2)
    assert abs(np.std(y1 - noise.samples) - 0.1) < 0.005
    y3 = generate(SynthSystem.identity(noise_rms=0.1, seed=5), noise).samples
    assert not np.array_equal(y1, y3)


def test_multitone_drives_only_even_bins():
    x = multitone_excitation(30, seed=2)
    assert abs(np.sqrt(np.mean(x.samples**2)) - 1) < 1e-12
    spec = np.abs(stft(x, StftConfig(window_kind="rectangular")).values)
    driven = multitone_bins()
    assert list(driven[:3]) == [2, 4, 6] and driven[-1] == 98
    others = np.setdiff1d(np.arange(101), driven)
    assert spec[:, others].max() <= 1e-9 * spec.max()


def test_resonator_taps_gain():
    taps, centre = resonator_taps(30.0, peak_gain=3.0)
    r = SynthSystem.fir(taps, centre).response(np.array([0.0, 30.0, 80.0]))
    np.testing.assert_allclose(np.abs(r), [1.0, 4.0, 1.0], atol=1e-3)
    np.testing.assert_allclose(r.imag, 0, atol=1e-12)


def test_stimulus_is_quantized():
    s = synthetic_stimulus(2.0, seed=1)
    np.testing.assert_array_equal(np.round(s.samples * 32768), s.samples * 32768)
    assert np.abs(s.samples).max() <= 0.9


def test_written_dataset_reproduces_envelope(tmp_path):
    manifest = write_synthetic_dataset(tmp_path, identity_factory, ("s01",), seed=2, duration_s=12)
    entry = load_manifest(manifest)["s01"]
    eeg = load_eeg(entry.eeg_path)
    env = extract_envelope(load_audio(entry.audio_path)).envelope
    for c in eeg:
        np.testing.assert_array_equal(eeg[c].samples, env.samples)


def test_response_record_label(noise):
    assert generate(SynthSystem.gain(2), noise).label == "response:gain"
    assert isinstance(generate(SynthSystem.gain(2), noise), SignalRecord)
