"""Dominant-peak detection on frequency curves and cross-participant histograms."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .types import FrequencySeries

DEFAULT_HEIGHT_FRAC = 0.5
DEFAULT_MIN_SEPARATION_HZ = 10.0
DEFAULT_BIN_WIDTH_HZ = 1.0
MAX_FREQ_HZ = 100.0


@dataclass(frozen=True)
class Peak:
    freq_hz: float
    magnitude: float
    width_hz: float
    prominence: float

    def to_dict(self) -> dict:
        return {
            "freq_hz": self.freq_hz,
            "magnitude": self.magnitude,
            "width_hz": self.width_hz,
            "prominence": self.prominence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Peak":
        return cls(d["freq_hz"], d["magnitude"], d["width_hz"], d["prominence"])


def local_maxima(x: np.ndarray, valid: np.ndarray) -> list[int]:
    """Indices of strict local maxima; a flat top resolves to its midpoint.

    The first and last samples, and samples next to an invalid bin, cannot
    be maxima because one neighbour is missing.
    """
    n = len(x)
    out = []
    i = 1
    while i < n - 1:
        if valid[i] and valid[i - 1] and x[i] > x[i - 1]:
            j = i
            while j + 1 < n - 1 and valid[j + 1] and x[j + 1] == x[i]:
                j += 1
            if valid[j + 1] and x[j + 1] < x[i]:
                out.append((i + j) // 2)
            i = j + 1
        else:
            i += 1
    return out


def _base(x, valid, p, step):
    """Lowest value met walking from ``p`` until a higher sample, an invalid bin or the edge."""
    lo, idx = x[p], p
    i = p + step
    while 0 <= i < len(x) and valid[i] and x[i] <= x[p]:
        if x[i] < lo:
            lo, idx = x[i], i
        i += step
    return lo, idx


def prominence_and_width(x: np.ndarray, valid: np.ndarray, p: int) -> tuple[float, float]:
    """Topographic prominence and width (in samples) at half the prominence."""
    left_min, left_idx = _base(x, valid, p, -1)
    right_min, right_idx = _base(x, valid, p, +1)
    prom = x[p] - max(left_min, right_min)
    ref = x[p] - prom / 2

    i = p
    while i > left_idx and x[i] > ref:
        i -= 1
    left = float(i)
    if x[i] < ref:
        left += (ref - x[i]) / (x[i + 1] - x[i])

    i = p
    while i < right_idx and x[i] > ref:
        i += 1
    right = float(i)
    if x[i] < ref:
        right -= (ref - x[i]) / (x[i - 1] - x[i])
    return float(prom), right - left


def detect_peaks(
    curve: FrequencySeries,
    height_frac: float = DEFAULT_HEIGHT_FRAC,
    min_separation_hz: float = DEFAULT_MIN_SEPARATION_HZ,
    exclude_dc: bool = True,
) -> list[Peak]:
    """Dominant peaks of ``curve``, sorted by frequency.

    Candidates are strict local maxima reaching ``height_frac`` of the curve
    maximum.  Survivors are picked tallest first (lower frequency wins a tie)
    so that no two lie closer than ``min_separation_hz``.  With
    ``exclude_dc`` the 0 Hz bin is dropped before anything else, so it
    neither becomes a peak nor sets the maximum.
    """
    x = np.asarray(curve.values, dtype=float)
    valid = np.asarray(curve.valid, dtype=bool)
    freqs = np.asarray(curve.bin_freqs_hz, dtype=float)
    if exclude_dc and len(freqs) and freqs[0] == 0:
        x, valid, freqs = x[1:], valid[1:], freqs[1:]
    if valid.sum() < 3:
        raise ValueError(f"peak detection needs at least 3 valid bins, got {int(valid.sum())}")
    df = freqs[1] - freqs[0]
    threshold = height_frac * x[valid].max()

    candidates = [p for p in local_maxima(x, valid) if x[p] >= threshold]
    candidates.sort(key=lambda p: (-x[p], freqs[p]))
    kept: list[int] = []
    for p in candidates:
        if all(abs(freqs[p] - freqs[q]) >= min_separation_hz for q in kept):
            kept.append(p)

    peaks = []
    for p in sorted(kept):
        prom, width = prominence_and_width(x, valid, p)
        peaks.append(Peak(float(freqs[p]), float(x[p]), float(width * df), prom))
    return peaks


@dataclass(frozen=True)
class PeakHistogram:
    bin_edges_hz: np.ndarray
    counts: dict[str, np.ndarray]
    n_participants: int

    def to_dict(self) -> dict:
        return {
            "bin_edges_hz": self.bin_edges_hz.tolist(),
            "counts": {k: v.tolist() for k, v in self.counts.items()},
            "n_participants": self.n_participants,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PeakHistogram":
        return cls(
            np.array(d["bin_edges_hz"], dtype=float),
            {k: np.array(v, dtype=int) for k, v in d["counts"].items()},
            int(d["n_participants"]),
        )

    def band_count(self, label: str, lo_hz: float, hi_hz: float) -> int:
        """Total count in the bins lying inside [lo_hz, hi_hz]."""
        lo_edges, hi_edges = self.bin_edges_hz[:-1], self.bin_edges_hz[1:]
        inside = (lo_edges >= lo_hz - 1e-9) & (hi_edges <= hi_hz + 1e-9)
        return int(self.counts[label][inside].sum())


def histogram_bin(freq_hz: float, bin_width_hz: float, max_freq_hz: float = MAX_FREQ_HZ) -> int:
    if not 0 <= freq_hz <= max_freq_hz:
        raise ValueError(f"peak frequency {freq_hz} Hz outside [0, {max_freq_hz}] Hz")
    n_bins = math.ceil(max_freq_hz / bin_width_hz - 1e-9)
    return min(int(math.floor(freq_hz / bin_width_hz)), n_bins - 1)


def aggregate_histogram(
    peaks_by_participant: Mapping[str, Mapping[str, Sequence[Peak]]],
    bin_width_hz: float = DEFAULT_BIN_WIDTH_HZ,
    labels: Sequence[str] | None = None,
    max_freq_hz: float = MAX_FREQ_HZ,
) -> PeakHistogram:
    """Count peak frequencies per ``bin_width_hz`` bin for every channel (or pair) label.

    ``labels`` fixes the label order; by default labels appear in first-seen
    order over participants sorted by id.
    """
    if not bin_width_hz > 0:
        raise ValueError("bin width must be positive")
    n_bins = math.ceil(max_freq_hz / bin_width_hz - 1e-9)
    edges = np.minimum(np.arange(n_bins + 1) * bin_width_hz, max_freq_hz)
    if labels is None:
        seen: dict[str, None] = {}
        for pid in sorted(peaks_by_participant):
            seen.update(dict.fromkeys(peaks_by_participant[pid]))
        labels = list(seen)
    counts = {label: np.zeros(n_bins, dtype=int) for label in labels}
    for pid in sorted(peaks_by_participant):
        for label, peaks in peaks_by_participant[pid].items():
            if label not in counts:
                raise KeyError(f"participant {pid}: unexpected label {label!r}")
            for pk in peaks:
                counts[label][histogram_bin(pk.freq_hz, bin_width_hz, max_freq_hz)] += 1
    return PeakHistogram(edges, counts, len(peaks_by_participant))
