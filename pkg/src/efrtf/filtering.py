"""FIR low-pass design/application and the FFT analytic signal."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy import signal as sp_signal

from .types import SignalRecord

log = logging.getLogger(__name__)

DEFAULT_MAX_TAPS = 8191
RESPONSE_GRID_POINTS = 4096


class FilterDesignError(ValueError):
    """The requested filter cannot be realized within the tap budget."""


@dataclass(frozen=True)
class FirSpec:
    cutoff_hz: float
    transition_width_hz: float
    passband_ripple_db: float
    stopband_atten_db: float
    sample_rate_hz: float

    def __post_init__(self):
        nyq = self.sample_rate_hz / 2
        if not 0 < self.cutoff_hz < nyq:
            raise ValueError(f"cutoff {self.cutoff_hz} Hz must lie in (0, {nyq}) Hz")
        if not self.transition_width_hz > 0:
            raise ValueError("transition width must be positive")
        if not self.stopband_atten_db > 0 or not self.passband_ripple_db > 0:
            raise ValueError("ripple and attenuation must be positive dB values")

    @property
    def passband_edge_hz(self) -> float:
        return self.cutoff_hz - self.transition_width_hz / 2

    @property
    def stopband_edge_hz(self) -> float:
        return self.cutoff_hz + self.transition_width_hz / 2

    def required_atten_db(self) -> float:
        """Attenuation figure implied by the stricter of the two tolerances.

        A window design has (nearly) equal ripple delta in both bands, so the
        passband ripple is converted to its linear deviation and compared
        against the stopband deviation.
        """
        delta_pass = 10 ** (self.passband_ripple_db / 20) - 1
        delta_stop = 10 ** (-self.stopband_atten_db / 20)
        return -20 * np.log10(min(delta_pass, delta_stop))

    def to_dict(self) -> dict:
        return {
            "cutoff_hz": self.cutoff_hz,
            "transition_width_hz": self.transition_width_hz,
            "passband_ripple_db": self.passband_ripple_db,
            "stopband_atten_db": self.stopband_atten_db,
            "sample_rate_hz": self.sample_rate_hz,
        }


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    spec: FirSpec

    @property
    def group_delay(self) -> int:
        return (len(self.taps) - 1) // 2

    def frequency_response(self, n_points: int = RESPONSE_GRID_POINTS):
        """(freqs_hz, complex response) on ``n_points`` equally spaced points in [0, fs/2]."""
        return frequency_response(self.taps, self.spec.sample_rate_hz, n_points)


def frequency_response(taps, sample_rate_hz: float, n_points: int = RESPONSE_GRID_POINTS):
    # grid includes both DC and Nyquist
    nfft = max(2 * (n_points - 1), len(taps))
    nfft = int(2 ** np.ceil(np.log2(nfft)))
    resp = np.fft.rfft(taps, nfft)
    freqs = np.fft.rfftfreq(nfft, 1 / sample_rate_hz)
    idx = np.round(np.linspace(0, len(freqs) - 1, n_points)).astype(int)
    return freqs[idx], resp[idx]


def meets_spec(taps, spec: FirSpec, n_points: int = RESPONSE_GRID_POINTS) -> bool:
    freqs, resp = frequency_response(taps, spec.sample_rate_hz, n_points)
    mag_db = 20 * np.log10(np.maximum(np.abs(resp), 1e-300))
    passband = freqs <= spec.passband_edge_hz
    stopband = freqs >= spec.stopband_edge_hz
    return bool(
        np.all(mag_db[passband] >= -spec.passband_ripple_db)
        and np.all(mag_db[passband] <= spec.passband_ripple_db)
        and np.all(mag_db[stopband] <= -spec.stopband_atten_db)
    )


def design_lowpass(spec: FirSpec, max_taps: int = DEFAULT_MAX_TAPS) -> FirFilter:
    """Kaiser-window low-pass meeting ``spec`` on the evaluation grid.

    The closed-form Kaiser estimate is occasionally a few taps short of the
    ripple bound, so the length is grown (keeping it odd) until the grid
    check passes or ``max_taps`` is exceeded.
    """
    nyq = spec.sample_rate_hz / 2
    if spec.stopband_edge_hz >= nyq:
        raise ValueError("cutoff + transition/2 must stay below Nyquist")
    atten = spec.required_atten_db()
    numtaps, beta = sp_signal.kaiserord(atten, spec.transition_width_hz / nyq)
    numtaps |= 1  # Type I: odd length
    while numtaps <= max_taps:
        taps = sp_signal.firwin(numtaps, spec.cutoff_hz, window=("kaiser", beta), fs=spec.sample_rate_hz)
        # exact symmetry, firwin is symmetric only up to rounding
        taps = 0.5 * (taps + taps[::-1])
        if meets_spec(taps, spec):
            taps.setflags(write=False)
            return FirFilter(taps, spec)
        numtaps += 2
    raise FilterDesignError(
        f"low-pass {spec.cutoff_hz} Hz / {spec.transition_width_hz} Hz transition at "
        f"{spec.sample_rate_hz} Hz needs more than {max_taps} taps"
    )


def apply_filter(filt: FirFilter, signal: SignalRecord) -> SignalRecord:
    """Linear-phase filtering with the group delay removed.

    Equivalent to full convolution followed by dropping ``(taps - 1) / 2``
    samples at the front, so the output is time-aligned with the input and
    has the same length.  Inputs beyond the record are taken as zeros; the
    affected samples at each end are reported through ``edge_samples``.
    """
    if not np.isclose(signal.sample_rate_hz, filt.spec.sample_rate_hz, rtol=1e-12):
        raise ValueError(
            f"signal rate {signal.sample_rate_hz} Hz differs from filter rate {filt.spec.sample_rate_hz} Hz"
        )
    if len(signal) <= len(filt.taps):
        raise ValueError(f"signal of {len(signal)} samples is too short for {len(filt.taps)} taps")
    out = sp_signal.oaconvolve(signal.samples, filt.taps, mode="same")
    edge = min(filt.group_delay + signal.edge_samples, len(signal))
    return signal.with_samples(out, edge_samples=edge)


def analytic_signal(signal: SignalRecord | np.ndarray) -> np.ndarray:
    """z = s + j*Hilbert(s) by zeroing negative frequencies of one full-length FFT."""
    x = np.asarray(signal.samples if isinstance(signal, SignalRecord) else signal, dtype=float)
    n = len(x)
    if n == 0:
        raise ValueError("analytic signal of an empty sequence")
    if n < 4:
        raise ValueError("analytic signal needs at least 4 samples")
    spectrum = sp_fft.fft(x)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[n // 2] = 1.0
        gain[1 : n // 2] = 2.0
    else:
        gain[1 : (n + 1) // 2] = 2.0
    return sp_fft.ifft(spectrum * gain)
