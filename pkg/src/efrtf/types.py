"""Shared domain types and frequency/time indexing conventions.

All containers are frozen dataclasses holding read-only numpy arrays, so
they can be shared freely between worker threads.  Every type round-trips
through a plain ``dict`` (``to_dict``/``from_dict``) whose keys are the
field names; complex numbers are encoded as ``{"re": float, "im": float}``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

__all__ = [
    "ComplexSpectrogram",
    "FrequencySeries",
    "SeriesKind",
    "SignalRecord",
    "TransferFunction",
    "bin_freq",
    "bin_freqs",
    "complex_from_json",
    "complex_to_json",
    "dumps",
    "loads",
]

TWO_PI = 2.0 * math.pi


def bin_freq(index: int, sample_rate_hz: float, window_len: int) -> float:
    """Frequency in Hz of one-sided DFT bin ``index`` for an ``window_len``-point DFT."""
    if window_len <= 0:
        raise ValueError(f"window length must be positive, got {window_len}")
    if not 0 <= index <= window_len // 2:
        raise ValueError(f"bin index {index} outside 0..{window_len // 2}")
    return index * sample_rate_hz / window_len


def bin_freqs(sample_rate_hz: float, window_len: int) -> np.ndarray:
    """All one-sided bin frequencies, ``K = N // 2 + 1`` of them."""
    return np.arange(window_len // 2 + 1) * (sample_rate_hz / window_len)


def _frozen(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def complex_to_json(values: np.ndarray):
    """Nested lists of ``{"re", "im"}`` objects mirroring ``values``' shape."""
    values = np.asarray(values)
    if values.ndim == 0:
        return {"re": float(values.real), "im": float(values.imag)}
    return [complex_to_json(v) for v in values]


def complex_from_json(obj) -> np.ndarray:
    def conv(o):
        if isinstance(o, dict):
            return complex(o["re"], o["im"])
        return [conv(v) for v in o]

    return np.array(conv(obj), dtype=complex)


def _real_to_json(values: np.ndarray):
    # NaN has no JSON spelling; emit null
    return [
        _real_to_json(v) if np.ndim(v) else (None if not math.isfinite(v) else float(v))
        for v in values
    ]


def _real_from_json(obj) -> np.ndarray:
    return np.array(obj, dtype=float)  # None -> nan


@dataclass(frozen=True)
class SignalRecord:
    """Uniformly sampled real-valued time series.

    ``edge_samples`` counts samples at each end that a preceding filter
    could not compute from real data (zero-padded edges); 0 means the whole
    record is reliable.
    """

    samples: np.ndarray
    sample_rate_hz: float
    label: str = ""
    edge_samples: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {samples.shape}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"signal {self.label!r} contains NaN or Inf")
        if self.edge_samples < 0:
            raise ValueError("edge_samples must be non-negative")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "edge_samples", int(self.edge_samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def with_samples(self, samples, **changes) -> "SignalRecord":
        kw = dict(sample_rate_hz=self.sample_rate_hz, label=self.label, edge_samples=0)
        kw.update(changes)
        return SignalRecord(samples, **kw)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples.tolist(),
            "sample_rate_hz": self.sample_rate_hz,
            "label": self.label,
            "edge_samples": self.edge_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignalRecord":
        return cls(
            np.array(d["samples"], dtype=float),
            d["sample_rate_hz"],
            d.get("label", ""),
            d.get("edge_samples", 0),
        )


@dataclass(frozen=True)
class ComplexSpectrogram:
    """One-sided time-frequency grid, ``values[m, k]`` for frame m and bin k."""

    values: np.ndarray
    frame_times_s: np.ndarray
    bin_freqs_hz: np.ndarray
    window_len_samples: int
    hop_samples: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        times = np.asarray(self.frame_times_s, dtype=float)
        freqs = np.asarray(self.bin_freqs_hz, dtype=float)
        n, hop = int(self.window_len_samples), int(self.hop_samples)
        if values.ndim != 2:
            raise ValueError("spectrogram values must be an M x K matrix")
        m, k = values.shape
        if m < 1 or k < 2:
            raise ValueError(f"need M >= 1 and K >= 2, got {values.shape}")
        if k != n // 2 + 1:
            raise ValueError(f"K={k} inconsistent with window length {n}")
        if times.shape != (m,) or freqs.shape != (k,):
            raise ValueError("frame_times_s / bin_freqs_hz length mismatch")
        if n < 2 or not 0 < hop:
            raise ValueError("window length must be >= 2 and hop positive")
        fs = freqs[1] * n
        if not np.allclose(freqs, np.arange(k) * fs / n, rtol=1e-12, atol=0):
            raise ValueError("bin frequencies must be k * fs / N")
        if m > 1 and not np.allclose(np.diff(times), hop / fs, rtol=1e-9, atol=0):
            raise ValueError("frame times must advance by hop / fs")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "frame_times_s", _frozen(times))
        object.__setattr__(self, "bin_freqs_hz", _frozen(freqs))
        object.__setattr__(self, "window_len_samples", n)
        object.__setattr__(self, "hop_samples", hop)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def sample_rate_hz(self) -> float:
        return float(self.bin_freqs_hz[1] * self.window_len_samples)

    def same_grid(self, other: "ComplexSpectrogram") -> bool:
        return (
            self.values.shape == other.values.shape
            and self.window_len_samples == other.window_len_samples
            and self.hop_samples == other.hop_samples
            and np.array_equal(self.bin_freqs_hz, other.bin_freqs_hz)
        )

    def to_dict(self) -> dict:
        return {
            "values": complex_to_json(self.values),
            "frame_times_s": self.frame_times_s.tolist(),
            "bin_freqs_hz": self.bin_freqs_hz.tolist(),
            "window_len_samples": self.window_len_samples,
            "hop_samples": self.hop_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComplexSpectrogram":
        return cls(
            complex_from_json(d["values"]),
            np.array(d["frame_times_s"], dtype=float),
            np.array(d["bin_freqs_hz"], dtype=float),
            d["window_len_samples"],
            d["hop_samples"],
        )


@dataclass(frozen=True)
class TransferFunction(ComplexSpectrogram):
    """H(m, k) for one (stimulus, channel) pair.

    ``valid`` marks the bins where the excitation was strong enough for the
    spectral ratio; invalid bins hold 0 and must be ignored downstream.
    """

    stimulus_label: str = "stimulus"
    channel_label: str = ""
    valid: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        valid = np.ones(self.values.shape, bool) if self.valid is None else np.asarray(self.valid, bool)
        if valid.shape != self.values.shape:
            raise ValueError("valid mask shape differs from values")
        if not np.all(np.isfinite(self.values[valid])):
            raise ValueError("non-finite transfer-function value on a valid bin")
        object.__setattr__(self, "valid", _frozen(valid))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(
            stimulus_label=self.stimulus_label,
            channel_label=self.channel_label,
            valid=self.valid.tolist(),
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction":
        return cls(
            complex_from_json(d["values"]),
            np.array(d["frame_times_s"], dtype=float),
            np.array(d["bin_freqs_hz"], dtype=float),
            d["window_len_samples"],
            d["hop_samples"],
            d.get("stimulus_label", "stimulus"),
            d.get("channel_label", ""),
            np.array(d["valid"], dtype=bool) if "valid" in d else None,
        )


class SeriesKind(str, enum.Enum):
    avg_magnitude = "avg_magnitude"
    phase_delay = "phase_delay"
    csd_magnitude = "csd_magnitude"
    coherence = "coherence"


@dataclass(frozen=True)
class FrequencySeries:
    """Real value per frequency bin, with a per-bin validity flag."""

    values: np.ndarray
    bin_freqs_hz: np.ndarray
    kind: SeriesKind
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        freqs = np.asarray(self.bin_freqs_hz, dtype=float)
        kind = SeriesKind(self.kind)
        valid = np.ones(values.shape, bool) if self.valid is None else np.asarray(self.valid, bool)
        if values.ndim != 1 or values.shape != freqs.shape or valid.shape != values.shape:
            raise ValueError("values, bin_freqs_hz and valid must be equal-length vectors")
        v = values[valid]
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite value on a valid bin")
        if kind is SeriesKind.coherence and np.any((v < 0) | (v > 1)):
            raise ValueError("coherence values must lie in [0, 1]")
        if kind is SeriesKind.phase_delay and np.any((v < 0) | (v >= TWO_PI)):
            raise ValueError("phase delay values must lie in [0, 2pi)")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "bin_freqs_hz", _frozen(freqs))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "valid", _frozen(valid))

    def __len__(self) -> int:
        return len(self.values)

    def scaled(self, factor: float) -> "FrequencySeries":
        return FrequencySeries(self.values * factor, self.bin_freqs_hz, self.kind, self.valid)

    def to_dict(self) -> dict:
        return {
            "values": _real_to_json(np.where(self.valid, self.values, np.nan)),
            "bin_freqs_hz": self.bin_freqs_hz.tolist(),
            "kind": self.kind.value,
            "valid": self.valid.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencySeries":
        valid = np.array(d["valid"], dtype=bool)
        values = np.nan_to_num(_real_from_json(d["values"]), nan=0.0)
        return cls(values, np.array(d["bin_freqs_hz"], dtype=float), d["kind"], valid)


def dumps(obj, **kwargs) -> str:
    """JSON text for any type exposing ``to_dict``."""
    return json.dumps(obj.to_dict(), allow_nan=False, **kwargs)


def loads(cls, text: str):
    return cls.from_dict(json.loads(text))


def field_names(cls) -> list[str]:
    return [f.name for f in fields(cls)]
