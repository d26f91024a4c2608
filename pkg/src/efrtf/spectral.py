"""Short-time Fourier transform on a fixed frame grid."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .types import ComplexSpectrogram, SignalRecord, bin_freqs


class WindowKind(str, enum.Enum):
    hann = "hann"
    hamming = "hamming"
    rectangular = "rectangular"


@dataclass(frozen=True)
class StftConfig:
    window_len_s: float = 1.0
    hop_s: float = 0.5
    window_kind: WindowKind = WindowKind.hann

    def __post_init__(self):
        object.__setattr__(self, "window_kind", WindowKind(self.window_kind))
        if not 0 < self.hop_s <= self.window_len_s:
            raise ValueError(f"need 0 < hop ({self.hop_s}) <= window ({self.window_len_s})")

    def samples(self, sample_rate_hz: float) -> tuple[int, int]:
        """(window length N, hop L) in samples at ``sample_rate_hz``."""
        n = int(round(self.window_len_s * sample_rate_hz))
        hop = int(round(self.hop_s * sample_rate_hz))
        if n < 2 or hop < 1:
            raise ValueError("window/hop shorter than one sample at this rate")
        return n, hop

    def to_dict(self) -> dict:
        return {"window_len_s": self.window_len_s, "hop_s": self.hop_s, "window_kind": self.window_kind.value}


def window(kind: WindowKind | str, n: int) -> np.ndarray:
    # periodic (DFT-even) forms: at 50 % hop Hann sums to a constant
    kind = WindowKind(kind)
    if kind is WindowKind.rectangular:
        return np.ones(n)
    phase = 2 * np.pi * np.arange(n) / n
    if kind is WindowKind.hann:
        return 0.5 - 0.5 * np.cos(phase)
    return 0.54 - 0.46 * np.cos(phase)


def frame_count(n_samples: int, window_len: int, hop: int) -> int:
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // hop + 1


def stft(signal: SignalRecord, config: StftConfig = StftConfig()) -> ComplexSpectrogram:
    """Unnormalized one-sided STFT.

    Frame m covers samples ``[m*L, m*L + N)``; a trailing partial frame is
    dropped.  ``X[m, k] = sum_n w(n) x(n + mL) exp(-2j pi k n / N)``.
    """
    fs = signal.sample_rate_hz
    n, hop = config.samples(fs)
    x = signal.samples
    m = frame_count(len(x), n, hop)
    if m == 0:
        raise ValueError(f"signal of {len(x)} samples is shorter than one {n}-sample window")
    frames = sliding_window_view(x, n)[::hop][:m]
    values = np.fft.rfft(frames * window(config.window_kind, n), axis=1)
    return ComplexSpectrogram(values, np.arange(m) * hop / fs, bin_freqs(fs, n), n, hop)
