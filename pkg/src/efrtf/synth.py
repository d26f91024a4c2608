"""Synthetic excitation/response pairs from systems with known transfer functions."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .types import SignalRecord

SYNTH_RATE_HZ = 200.0
MAX_DELAY_SAMPLES = 100  # default STFT hop at 200 Hz


@dataclass(frozen=True)
class SynthSystem:
    """A linear system plus additive white Gaussian sensor noise.

    Build instances with the class methods; ``params`` depends on ``kind``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    noise_rms: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_rms < 0:
            raise ValueError("noise_rms must be >= 0")

    @classmethod
    def identity(cls, noise_rms=0.0, seed=0):
        return cls("identity", {}, noise_rms, seed)

    @classmethod
    def gain(cls, alpha: float, noise_rms=0.0, seed=0):
        if not alpha > 0:
            raise ValueError("gain must be positive")
        return cls("gain", {"alpha": float(alpha)}, noise_rms, seed)

    @classmethod
    def delay(cls, samples: int, noise_rms=0.0, seed=0):
        if not 0 <= samples < MAX_DELAY_SAMPLES:
            raise ValueError(f"delay must lie in [0, {MAX_DELAY_SAMPLES}) samples")
        return cls("delay", {"samples": int(samples)}, noise_rms, seed)

    @classmethod
    def fir(cls, taps: Sequence[float], origin: int = 0, noise_rms=0.0, seed=0):
        """y(n) = sum_j taps[j] x(n - j + origin); ``origin`` > 0 makes the filter non-causal."""
        return cls("fir", {"taps": tuple(float(t) for t in taps), "origin": int(origin)}, noise_rms, seed)

    @classmethod
    def gain_phase_profile(cls, magnitude: Sequence[float], phase: Sequence[float], noise_rms=0.0, seed=0):
        """Frequency-domain gain ``magnitude[k]`` and phase ``phase[k]`` on K evenly spaced bins 0..fs/2."""
        if len(magnitude) != len(phase) or len(magnitude) < 2:
            raise ValueError("magnitude and phase profiles need equal length >= 2")
        return cls(
            "gain_phase_profile",
            {"magnitude": tuple(map(float, magnitude)), "phase": tuple(map(float, phase))},
            noise_rms,
            seed,
        )

    @classmethod
    def time_varying(cls, schedule: Sequence[tuple[float, Sequence[float]]], origin: int = 0, noise_rms=0.0, seed=0):
        """Causal (or ``origin``-shifted) FIR whose taps switch at the listed start times (s)."""
        starts = [float(s) for s, _ in schedule]
        if not starts or starts[0] != 0 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("schedule must start at 0 s with increasing start times")
        segs = tuple((s, tuple(map(float, taps))) for s, taps in schedule)
        return cls("time_varying", {"schedule": segs, "origin": int(origin)}, noise_rms, seed)

    def response(self, freqs_hz: np.ndarray, sample_rate_hz: float = SYNTH_RATE_HZ) -> np.ndarray:
        """Complex frequency response of the (time-invariant) system at ``freqs_hz``."""
        f = np.asarray(freqs_hz, dtype=float)
        if self.kind == "identity":
            return np.ones_like(f, dtype=complex)
        if self.kind == "gain":
            return np.full(f.shape, self.params["alpha"], dtype=complex)
        if self.kind == "delay":
            return np.exp(-2j * np.pi * f * self.params["samples"] / sample_rate_hz)
        if self.kind == "fir":
            return fir_response(self.params["taps"], self.params["origin"], f, sample_rate_hz)
        if self.kind == "gain_phase_profile":
            grid = np.linspace(0, sample_rate_hz / 2, len(self.params["magnitude"]))
            mag = np.interp(f, grid, self.params["magnitude"])
            ph = np.interp(f, grid, np.unwrap(self.params["phase"]))
            return mag * np.exp(1j * ph)
        raise ValueError(f"{self.kind} system has no single frequency response")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": _listify(self.params), "noise_rms": self.noise_rms, "seed": self.seed}


def _listify(obj):
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (tuple, list)):
        return [_listify(v) for v in obj]
    return obj


def fir_response(taps, origin: int, freqs_hz, sample_rate_hz: float = SYNTH_RATE_HZ) -> np.ndarray:
    j = np.arange(len(taps)) - origin
    return np.exp(-2j * np.pi * np.outer(freqs_hz, j) / sample_rate_hz) @ np.asarray(taps, dtype=float)


def _fir_apply(x: np.ndarray, taps, origin: int) -> np.ndarray:
    full = np.convolve(x, np.asarray(taps, dtype=float))
    return full[origin : origin + len(x)]


def generate(system: SynthSystem, excitation: SignalRecord) -> SignalRecord:
    """Response of ``system`` to ``excitation`` plus seeded sensor noise."""
    x = excitation.samples
    fs = excitation.sample_rate_hz
    kind, p = system.kind, system.params
    if kind == "identity":
        y = x.copy()
    elif kind == "gain":
        y = p["alpha"] * x
    elif kind == "delay":
        d = p["samples"]
        y = np.concatenate([np.zeros(d), x[: len(x) - d]])
    elif kind == "fir":
        y = _fir_apply(x, p["taps"], p["origin"])
    elif kind == "gain_phase_profile":
        # applied to the whole record at once; smooth profiles give short impulse responses
        spectrum = np.fft.rfft(x)
        freqs = np.fft.rfftfreq(len(x), 1 / fs)
        y = np.fft.irfft(spectrum * system.response(freqs, fs), n=len(x))
    elif kind == "time_varying":
        y = np.empty_like(x)
        starts = [int(round(s * fs)) for s, _ in p["schedule"]] + [len(x)]
        for (_, taps), a, b in zip(p["schedule"], starts, starts[1:]):
            y[a:b] = _fir_apply(x, taps, p["origin"])[a:b]
    else:
        raise ValueError(f"unknown system kind {kind!r}")
    if system.noise_rms > 0:
        rng = np.random.default_rng(system.seed)
        y = y + system.noise_rms * rng.standard_normal(len(y))
    return SignalRecord(y, fs, f"response:{kind}")


def broadband_excitation(duration_s: float, seed: int, sample_rate_hz: float = SYNTH_RATE_HZ) -> SignalRecord:
    """Seeded unit-RMS white Gaussian noise.

    Sampled at 200 Hz, white noise already occupies exactly 0-100 Hz, so no
    further band-limiting is needed.
    """
    if duration_s < 10:
        raise ValueError("broadband excitation needs at least 10 s")
    n = int(round(duration_s * sample_rate_hz))
    x = np.random.default_rng(seed).standard_normal(n)
    x -= x.mean()
    x /= np.sqrt(np.mean(x**2))
    return SignalRecord(x, sample_rate_hz, f"excitation:{seed}")


def multitone_bins(window_len: int = 200, step: int = 2) -> np.ndarray:
    """DFT bins driven by :func:`multitone_excitation`: every ``step``-th interior bin."""
    return np.arange(step, window_len // 2, step)


def multitone_excitation(duration_s: float, seed: int, window_len: int = 200, step: int = 2,
                         sample_rate_hz: float = SYNTH_RATE_HZ) -> SignalRecord:
    """Unit-RMS sum of equal tones on :func:`multitone_bins`, random phases.

    Tones sit exactly on bins of a ``window_len``-point DFT, so the signal is
    periodic in ``window_len`` samples and every frame sees the same tone
    magnitudes.  With ``step=2`` a periodic Hann window leaks each tone only
    into the odd bins between tones, so driven bins stay exact.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    k = multitone_bins(window_len, step)
    phases = rng.uniform(0, 2 * np.pi, len(k))
    t = np.arange(n)
    x = np.cos(2 * np.pi * np.outer(t, k) / window_len + phases).sum(axis=1)
    return SignalRecord(x / np.sqrt(np.mean(x**2)), sample_rate_hz, f"multitone:{seed}")
