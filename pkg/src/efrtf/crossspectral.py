"""Cross-spectral density and coherence between two channels' transfer functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import FrequencySeries, SeriesKind, TransferFunction, complex_from_json, complex_to_json

DEFAULT_MAX_LAG = 10


@dataclass(frozen=True)
class CsdResult:
    """R_xy(tau, k); row ``i`` holds lag ``lags[i]`` (frames)."""

    values: np.ndarray
    lags: np.ndarray
    bin_freqs_hz: np.ndarray
    pair: tuple[str, str]
    valid: np.ndarray
    counts: np.ndarray

    def row(self, lag: int) -> int:
        hits = np.flatnonzero(self.lags == lag)
        if not len(hits):
            raise KeyError(f"lag {lag} not computed")
        return int(hits[0])

    def zero_lag(self) -> np.ndarray:
        return self.values[self.row(0)]

    def magnitude_series(self, lag: int = 0) -> FrequencySeries:
        i = self.row(lag)
        return FrequencySeries(np.abs(self.values[i]), self.bin_freqs_hz, SeriesKind.csd_magnitude, self.valid[i])

    def to_dict(self) -> dict:
        return {
            "values": complex_to_json(self.values),
            "lags": self.lags.tolist(),
            "bin_freqs_hz": self.bin_freqs_hz.tolist(),
            "pair": list(self.pair),
            "valid": self.valid.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CsdResult":
        return cls(
            complex_from_json(d["values"]),
            np.array(d["lags"], dtype=int),
            np.array(d["bin_freqs_hz"], dtype=float),
            tuple(d["pair"]),
            np.array(d["valid"], dtype=bool),
            np.array(d["counts"], dtype=int),
        )


def _check_pair(tf_x: TransferFunction, tf_y: TransferFunction):
    if tf_x.values.shape != tf_y.values.shape or not np.array_equal(tf_x.bin_freqs_hz, tf_y.bin_freqs_hz):
        raise ValueError(f"transfer functions differ in shape: {tf_x.values.shape} vs {tf_y.values.shape}")


def csd(tf_x: TransferFunction, tf_y: TransferFunction, max_lag: int = DEFAULT_MAX_LAG) -> CsdResult:
    """Lagged cross-spectral density averaged over jointly valid frame pairs.

    For each lag tau, ``R[tau, k] = mean over m of H_x(m, k) * conj(H_y(m + tau, k))``
    where the mean runs over the frames with both ``m`` and ``m + tau``
    in range and valid.  Lag/bin cells with no such frame are invalid.
    """
    _check_pair(tf_x, tf_y)
    n_frames, n_bins = tf_x.values.shape
    if not 0 <= max_lag < n_frames:
        raise ValueError(f"max_lag {max_lag} must lie in [0, {n_frames})")
    hx = np.where(tf_x.valid, tf_x.values, 0)
    hy = np.where(tf_y.valid, tf_y.values, 0)
    lags = np.arange(-max_lag, max_lag + 1)
    values = np.zeros((len(lags), n_bins), dtype=complex)
    counts = np.zeros((len(lags), n_bins), dtype=int)
    for i, tau in enumerate(lags):
        xs = slice(max(0, -tau), n_frames - max(0, tau))
        ys = slice(max(0, tau), n_frames - max(0, -tau))
        both = tf_x.valid[xs] & tf_y.valid[ys]
        counts[i] = both.sum(axis=0)
        sums = np.where(both, hx[xs] * np.conj(hy[ys]), 0).sum(axis=0)
        np.divide(sums, counts[i], out=values[i], where=counts[i] > 0)
    return CsdResult(values, lags, tf_x.bin_freqs_hz.copy(), (tf_x.channel_label, tf_y.channel_label),
                     counts > 0, counts)


def coherence_coefficient(tf_x: TransferFunction, tf_y: TransferFunction) -> FrequencySeries:
    """|sum H_x H_y*| / sqrt(sum |H_x|^2 sum |H_y|^2) over jointly valid frames."""
    _check_pair(tf_x, tf_y)
    both = tf_x.valid & tf_y.valid
    hx = np.where(both, tf_x.values, 0)
    hy = np.where(both, tf_y.values, 0)
    cross = np.abs((hx * np.conj(hy)).sum(axis=0))
    denom = np.sqrt((np.abs(hx) ** 2).sum(axis=0) * (np.abs(hy) ** 2).sum(axis=0))
    ok = both.any(axis=0) & (denom > 0)
    c = np.divide(cross, denom, out=np.zeros_like(cross), where=ok)
    # Cauchy-Schwarz holds exactly; rounding may not
    c = np.clip(c, 0.0, 1.0)
    return FrequencySeries(c, tf_x.bin_freqs_hz, SeriesKind.coherence, ok)
