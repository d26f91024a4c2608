"""On-disk synthetic datasets (WAV stimulus, EEG CSV, manifest) with known systems.

The EEG of each channel is the response of a :class:`SynthSystem` to the
envelope that the analysis itself extracts from the written (16-bit
quantized) stimulus, so a run over the dataset must recover the system.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from .envelope import extract_envelope
from .ingest import CHANNELS, PAPER_ROSTER, load_audio, write_wav
from .report import atomic_write_text, fmt, write_csv
from .synth import SynthSystem, generate
from .types import SignalRecord

SystemFactory = Callable[[str, str], SynthSystem]


def synthetic_stimulus(duration_s: float, seed: int, sample_rate_hz: float = 8000.0,
                       carrier_hz: float = 440.0, depth: float = 0.5) -> SignalRecord:
    """Tone carrier amplitude-modulated by positive noise band-limited to 0-100 Hz."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    spectrum = np.fft.rfft(rng.standard_normal(n))
    spectrum[np.fft.rfftfreq(n, 1 / sample_rate_hz) > 100] = 0
    mod = np.fft.irfft(spectrum, n)
    mod /= np.sqrt(np.mean(mod**2))
    mod = np.maximum(1 + depth * mod, 0.05)
    t = np.arange(n) / sample_rate_hz
    x = mod * np.cos(2 * np.pi * carrier_hz * t)
    x *= 0.9 / np.abs(x).max()
    # 16-bit quantization up front so the in-memory copy equals the WAV file
    x = np.round(x * 32768) / 32768
    return SignalRecord(x, sample_rate_hz, "stimulus")


def resonator_taps(peak_hz: float, peak_gain: float = 1.0, length: int = 41, floor: float = 1.0,
                   sample_rate_hz: float = 200.0):
    """Zero-phase FIR (origin at the centre) with gain ``floor + peak_gain`` at ``peak_hz``.

    Far from ``peak_hz`` the gain returns to about ``floor``.
    """
    centre = (length - 1) // 2
    n = np.arange(length) - centre
    bump = np.hanning(length) * np.cos(2 * np.pi * peak_hz * n / sample_rate_hz)
    bump *= peak_gain / np.abs(np.exp(-2j * np.pi * peak_hz * n / sample_rate_hz) @ bump)
    bump[centre] += floor
    return bump, centre


def resonance_profile(peak_hz: float = 11.0, boost: float = 4.0, var_hz2: float = 8.0, n_bins: int = 101,
                      sample_rate_hz: float = 200.0) -> tuple[np.ndarray, np.ndarray]:
    """|G(f)| = 1 + boost * exp(-(f - peak)^2 / var) with zero phase, on ``n_bins`` points over 0..fs/2."""
    f = np.linspace(0, sample_rate_hz / 2, n_bins)
    return 1 + boost * np.exp(-((f - peak_hz) ** 2) / var_hz2), np.zeros(n_bins)


def identity_factory(pid: str, channel: str) -> SynthSystem:
    return SynthSystem.identity()


def resonance_factory(peak_hz: float = 11.0, noise_rms: float = 0.02, seed: int = 0) -> SystemFactory:
    """Same resonance on every channel, independent sensor noise per participant/channel."""
    mag, phase = resonance_profile(peak_hz)

    def make(pid: str, channel: str) -> SynthSystem:
        s = seed * 1_000_003 + sum(map(ord, pid)) * 101 + sum(map(ord, channel))
        return SynthSystem.gain_phase_profile(mag, phase, noise_rms=noise_rms, seed=s)

    return make


def write_participant_files(directory: Path, pid: str, factory: SystemFactory, seed: int,
                            duration_s: float = 120.0, audio_rate_hz: float = 8000.0,
                            channels: Sequence[str] = CHANNELS) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    audio = synthetic_stimulus(duration_s, seed, audio_rate_hz)
    wav = directory / f"{pid}_stimulus.wav"
    write_wav(wav, audio)
    env = extract_envelope(load_audio(wav)).envelope
    eeg = {c: generate(factory(pid, c), env).samples for c in channels}
    t = np.arange(len(env)) / env.sample_rate_hz
    rows = ([fmt(t[i])] + [fmt(eeg[c][i]) for c in channels] for i in range(len(env)))
    write_csv(directory / f"{pid}_eeg.csv", ["time_s", *channels], rows)
    return {"eeg_path": f"{pid}_eeg.csv", "audio_path": wav.name, "start_s": 0.0, "language_group": "synthetic"}


def write_synthetic_dataset(directory: Path, factory: SystemFactory = identity_factory,
                            participants: Sequence[str] = PAPER_ROSTER, seed: int = 0,
                            duration_s: float = 120.0, audio_rate_hz: float = 8000.0) -> Path:
    """Write one participant per id plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    manifest = {}
    for i, pid in enumerate(participants):
        manifest[pid] = write_participant_files(directory, pid, factory, seed * 1000 + i, duration_s, audio_rate_hz)
    path = directory / "manifest.json"
    atomic_write_text(path, json.dumps(manifest, indent=1) + "\n")
    return path
