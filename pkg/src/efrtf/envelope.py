"""Stimulus envelope extraction and rate conversion to the EEG rate."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import signal as sp_signal

from .filtering import FirFilter, FirSpec, analytic_signal, apply_filter, design_lowpass
from .types import SignalRecord

log = logging.getLogger(__name__)

EEG_RATE_HZ = 200.0
MIN_AUDIO_RATE_HZ = 2000.0
ENVELOPE_MAX_TAPS = 16383
RIPPLE_DB = 0.00175
ATTEN_DB = 60.0


def carrier_spec(sample_rate_hz: float) -> FirSpec:
    return FirSpec(1000.0, 30.0, RIPPLE_DB, ATTEN_DB, sample_rate_hz)


def smoothing_spec(sample_rate_hz: float) -> FirSpec:
    return FirSpec(100.0, 20.0, RIPPLE_DB, ATTEN_DB, sample_rate_hz)


@lru_cache(maxsize=16)
def _cached_design(spec: FirSpec) -> FirFilter:
    return design_lowpass(spec, max_taps=ENVELOPE_MAX_TAPS)


@dataclass(frozen=True)
class EnvelopeResult:
    envelope: SignalRecord
    audio_rate_envelope: SignalRecord
    params: dict
    clamp_count: int = 0
    max_clamp: float = 0.0


def _rational(target: float, source: float) -> Fraction:
    return Fraction(target).limit_denominator(10_000) / Fraction(source).limit_denominator(10_000)


def resample(signal: SignalRecord, target_rate_hz: float) -> SignalRecord:
    """Polyphase rational down-sampling to ``target_rate_hz``.

    Output length is ``round(len * target / source)``.
    """
    source = signal.sample_rate_hz
    if target_rate_hz > source:
        raise ValueError(f"upsampling {source} Hz -> {target_rate_hz} Hz is not supported")
    if target_rate_hz <= 0:
        raise ValueError("target rate must be positive")
    ratio = _rational(target_rate_hz, source)
    n_out = int(round(len(signal) * target_rate_hz / source))
    if ratio == 1:
        return signal.with_samples(signal.samples, edge_samples=signal.edge_samples)
    y = sp_signal.resample_poly(signal.samples, ratio.numerator, ratio.denominator, padtype="line")
    if len(y) < n_out:
        y = np.concatenate([y, np.full(n_out - len(y), y[-1])])
    y = y[:n_out]
    # polyphase kernel spans 10 input periods of the slower side on each end
    edge = math.ceil(signal.edge_samples * target_rate_hz / source) + 10
    return SignalRecord(y, target_rate_hz, signal.label, min(edge, n_out))


def _clamp(x: np.ndarray) -> tuple[np.ndarray, int, float]:
    neg = x < 0
    count = int(np.count_nonzero(neg))
    worst = float(-x[neg].min()) if count else 0.0
    return np.where(neg, 0.0, x), count, worst


def extract_envelope(audio: SignalRecord, target_rate_hz: float = EEG_RATE_HZ) -> EnvelopeResult:
    """Envelope a(n) of a mono stimulus, returned at ``target_rate_hz``.

    Steps: 1000 Hz low-pass, analytic signal magnitude, 100 Hz low-pass,
    clamp of filter ringing below zero, polyphase resampling.  The resampler
    can ring too, so the output is clamped again; both clamps are counted.
    """
    samples = np.asarray(audio.samples)
    if samples.ndim != 1:
        raise ValueError("stereo input: downmix to mono first")
    fs = audio.sample_rate_hz
    if fs < MIN_AUDIO_RATE_HZ:
        raise ValueError(f"audio rate {fs} Hz too low for the 1000 Hz pre-filter (need >= {MIN_AUDIO_RATE_HZ} Hz)")

    pre = _cached_design(carrier_spec(fs))
    post = _cached_design(smoothing_spec(fs))

    band_limited = apply_filter(pre, audio)
    amplitude = np.abs(analytic_signal(band_limited))
    smoothed = apply_filter(post, band_limited.with_samples(amplitude, edge_samples=band_limited.edge_samples))
    clamped, n1, w1 = _clamp(smoothed.samples)
    audio_env = smoothed.with_samples(clamped, label=f"{audio.label or 'stimulus'}:envelope",
                                      edge_samples=smoothed.edge_samples)

    env = resample(audio_env, target_rate_hz)
    clamped2, n2, w2 = _clamp(env.samples)
    env = env.with_samples(clamped2, edge_samples=env.edge_samples)
    if n1 or n2:
        log.debug("envelope clamp: %d + %d samples, max %.3g", n1, n2, max(w1, w2))

    params = {
        "carrier_lowpass": pre.spec.to_dict() | {"taps": len(pre.taps)},
        "envelope_lowpass": post.spec.to_dict() | {"taps": len(post.taps)},
        "target_rate_hz": float(target_rate_hz),
    }
    return EnvelopeResult(env, audio_env, params, n1 + n2, max(w1, w2))
