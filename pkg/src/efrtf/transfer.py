"""Time-varying transfer function H(m, k) = E(m, k) / A(m, k) and its summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import TWO_PI, ComplexSpectrogram, FrequencySeries, SeriesKind, TransferFunction

DEFAULT_FLOOR_RATIO = 1e-3
# angle differences carry ~1e-15 rad of rounding; anything this close below
# 2*pi is the same angle as 0 and is reported as 0
WRAP_SNAP_RAD = 1e-9


@dataclass(frozen=True)
class TfMask:
    valid: np.ndarray
    floor_ratio: float = DEFAULT_FLOOR_RATIO

    def to_dict(self) -> dict:
        return {"valid": self.valid.tolist(), "floor_ratio": self.floor_ratio}

    @classmethod
    def from_dict(cls, d: dict) -> "TfMask":
        return cls(np.array(d["valid"], dtype=bool), d["floor_ratio"])


def excitation_mask(env_spec: ComplexSpectrogram, floor_ratio: float = DEFAULT_FLOOR_RATIO) -> TfMask:
    """Bins whose excitation magnitude is at least ``floor_ratio`` of the global maximum.

    Exactly-zero excitation is always invalid, even for an all-zero input.
    """
    mag = np.abs(env_spec.values)
    valid = (mag >= floor_ratio * mag.max()) & (mag > 0)
    valid.setflags(write=False)
    return TfMask(valid, float(floor_ratio))


def wrap_phase(phi) -> np.ndarray:
    """Map angles into [0, 2*pi)."""
    w = np.mod(phi, TWO_PI)
    return np.where(w >= TWO_PI - WRAP_SNAP_RAD, 0.0, w)


def _check_grid(env_spec: ComplexSpectrogram, eeg_spec: ComplexSpectrogram):
    if not env_spec.same_grid(eeg_spec):
        raise ValueError(
            f"spectrogram grids differ: {env_spec.shape} N={env_spec.window_len_samples} "
            f"L={env_spec.hop_samples} vs {eeg_spec.shape} N={eeg_spec.window_len_samples} L={eeg_spec.hop_samples}"
        )


def transfer_function(
    env_spec: ComplexSpectrogram,
    eeg_spec: ComplexSpectrogram,
    floor_ratio: float = DEFAULT_FLOOR_RATIO,
    stimulus_label: str = "stimulus",
    channel_label: str = "",
) -> tuple[TransferFunction, TfMask]:
    """Spectral ratio of response to excitation on bins where the excitation is usable.

    Masked bins hold 0 and carry ``valid == False``.
    """
    _check_grid(env_spec, eeg_spec)
    mask = excitation_mask(env_spec, floor_ratio)
    a = env_spec.values
    h = np.zeros_like(a)
    np.divide(eeg_spec.values, a, out=h, where=mask.valid)
    tf = TransferFunction(
        h,
        env_spec.frame_times_s,
        env_spec.bin_freqs_hz,
        env_spec.window_len_samples,
        env_spec.hop_samples,
        stimulus_label=stimulus_label,
        channel_label=channel_label,
        valid=mask.valid,
    )
    return tf, mask


def log_magnitude_map(tf: TransferFunction) -> np.ndarray:
    """log10 |H(m, k)|; NaN marks masked bins (serialized as null)."""
    out = np.full(tf.values.shape, np.nan)
    with np.errstate(divide="ignore"):
        np.log10(np.abs(tf.values), out=out, where=tf.valid)
    return out


def avg_magnitude(tf: TransferFunction) -> FrequencySeries:
    """Mean of |H(m, k)| over the valid frames of each bin."""
    counts = tf.valid.sum(axis=0)
    sums = np.where(tf.valid, np.abs(tf.values), 0.0).sum(axis=0)
    has = counts > 0
    mean = np.divide(sums, counts, out=np.zeros_like(sums), where=has)
    return FrequencySeries(mean, tf.bin_freqs_hz, SeriesKind.avg_magnitude, has)


def phase_difference(env_spec: ComplexSpectrogram, eeg_spec: ComplexSpectrogram) -> np.ndarray:
    """arg E - arg A per (m, k), wrapped into [0, 2*pi)."""
    return wrap_phase(np.angle(eeg_spec.values) - np.angle(env_spec.values))


def phase_delay(
    env_spec: ComplexSpectrogram,
    eeg_spec: ComplexSpectrogram,
    mask: TfMask,
    circular: bool = False,
) -> FrequencySeries:
    """Time-averaged phase difference per bin, in [0, 2*pi).

    The default is the plain arithmetic mean of the wrapped differences.  It
    is ill-conditioned wherever the true phase sits near 0 (mod 2*pi): frames
    scattered to either side of the cut average to roughly pi.
    ``circular=True`` averages unit phasors instead.
    """
    _check_grid(env_spec, eeg_spec)
    if mask.valid.shape != env_spec.shape:
        raise ValueError("mask shape differs from spectrogram shape")
    valid = mask.valid
    counts = valid.sum(axis=0)
    has = counts > 0
    dphi = phase_difference(env_spec, eeg_spec)
    if circular:
        phasor = np.where(valid, np.exp(1j * dphi), 0).sum(axis=0)
        mean = np.where(has, wrap_phase(np.angle(phasor)), 0.0)
    else:
        sums = np.where(valid, dphi, 0.0).sum(axis=0)
        mean = np.divide(sums, counts, out=np.zeros_like(sums), where=has)
        # a mean of values in [0, 2pi) can round up to exactly 2pi
        mean = np.minimum(mean, np.nextafter(TWO_PI, 0))
    return FrequencySeries(mean, env_spec.bin_freqs_hz, SeriesKind.phase_delay, has)
