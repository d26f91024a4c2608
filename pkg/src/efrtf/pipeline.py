"""Per-participant analysis: envelope, transfer functions, pair metrics, peaks."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import crossspectral, peaks, transfer
from .envelope import EnvelopeResult, extract_envelope
from .ingest import (
    ANALYSIS_DURATION_S,
    CHANNELS,
    ManifestEntry,
    ParticipantRecord,
    align_and_trim,
    load_participant,
)
from .spectral import StftConfig, stft
from .types import ComplexSpectrogram, FrequencySeries, SignalRecord, TransferFunction

log = logging.getLogger(__name__)

EDGE_TRIM_S = 0.5


@dataclass(frozen=True)
class PeakConfig:
    height_frac: float = peaks.DEFAULT_HEIGHT_FRAC
    min_separation_hz: float = peaks.DEFAULT_MIN_SEPARATION_HZ
    bin_width_hz: float = peaks.DEFAULT_BIN_WIDTH_HZ

    def to_dict(self) -> dict:
        return {
            "height_frac": self.height_frac,
            "min_separation_hz": self.min_separation_hz,
            "bin_width_hz": self.bin_width_hz,
        }


def all_pairs(channels: Sequence[str]) -> list[tuple[str, str]]:
    return list(itertools.combinations(channels, 2))


@dataclass(frozen=True)
class RunConfig:
    manifest_path: Path | None = None
    output_dir: Path | None = None
    stft: StftConfig = StftConfig()
    mask_floor_ratio: float = transfer.DEFAULT_FLOOR_RATIO
    peak: PeakConfig = PeakConfig()
    channels: tuple[str, ...] = CHANNELS
    pairs: tuple[tuple[str, str], ...] = field(default_factory=lambda: tuple(all_pairs(CHANNELS)))
    emit_plots: bool = False
    jobs: int | None = None
    seed: int = 0
    max_lag: int = crossspectral.DEFAULT_MAX_LAG
    duration_s: float = ANALYSIS_DURATION_S
    edge_trim_s: float = EDGE_TRIM_S
    circular_phase: bool = False

    def __post_init__(self):
        unknown = {c for pair in self.pairs for c in pair} - set(self.channels)
        if unknown:
            raise ValueError(f"pairs reference channels not analysed: {sorted(unknown)}")

    def to_dict(self) -> dict:
        """Every parameter that can change results.

        Output directory and worker count are left out, so runs that differ
        only in where or how fast they ran echo identical configs.
        """
        return {
            "manifest_path": None if self.manifest_path is None else str(self.manifest_path),
            "stft": self.stft.to_dict(),
            "mask_floor_ratio": self.mask_floor_ratio,
            "peak": self.peak.to_dict(),
            "channels": list(self.channels),
            "pairs": [list(p) for p in self.pairs],
            "emit_plots": self.emit_plots,
            "seed": self.seed,
            "max_lag": self.max_lag,
            "duration_s": self.duration_s,
            "edge_trim_s": self.edge_trim_s,
            "circular_phase": self.circular_phase,
        }


@dataclass
class ChannelResult:
    tf: TransferFunction
    log_magnitude: np.ndarray
    avg_magnitude: FrequencySeries
    phase_delay: FrequencySeries
    peaks: list[peaks.Peak]


@dataclass
class PairResult:
    csd: crossspectral.CsdResult
    csd_magnitude: FrequencySeries
    coherence: FrequencySeries
    peaks: list[peaks.Peak]


@dataclass
class ParticipantAnalysis:
    participant_id: str
    envelope: SignalRecord
    envelope_spec: ComplexSpectrogram
    mask: transfer.TfMask
    channels: dict[str, ChannelResult]
    pairs: dict[tuple[str, str], PairResult]
    envelope_result: EnvelopeResult | None = None

    @property
    def bin_freqs_hz(self) -> np.ndarray:
        return self.envelope_spec.bin_freqs_hz


def pair_label(pair: tuple[str, str]) -> str:
    return f"{pair[0]}-{pair[1]}"


def _trim(sig: SignalRecord, n: int, edge: int) -> SignalRecord:
    return sig.with_samples(sig.samples[edge : n - edge])


def _safe_peaks(curve: FrequencySeries, cfg: PeakConfig, what: str) -> list[peaks.Peak]:
    try:
        return peaks.detect_peaks(curve, cfg.height_frac, cfg.min_separation_hz)
    except ValueError as exc:
        log.warning("%s: no peaks (%s)", what, exc)
        return []


def analyze_signals(
    participant_id: str,
    envelope: SignalRecord,
    eeg: dict[str, SignalRecord],
    config: RunConfig = RunConfig(),
    envelope_result: EnvelopeResult | None = None,
) -> ParticipantAnalysis:
    """Run every metric on an envelope and the EEG channels at the same rate.

    Signals are cut to a common length, then ``edge_trim_s`` is removed from
    both ends to drop filter start-up samples.
    """
    fs = envelope.sample_rate_hz
    for c in config.channels:
        if c not in eeg:
            raise KeyError(f"{participant_id}: channel {c} missing")
        if eeg[c].sample_rate_hz != fs:
            raise ValueError(f"{participant_id}/{c}: rate {eeg[c].sample_rate_hz} Hz != envelope rate {fs} Hz")
    n = min([len(envelope)] + [len(eeg[c]) for c in config.channels])
    edge = int(round(config.edge_trim_s * fs))
    if n - 2 * edge <= 0:
        raise ValueError(f"{participant_id}: {n} samples leave nothing after edge trimming")
    env = _trim(envelope, n, edge)
    A = stft(env, config.stft)

    channels: dict[str, ChannelResult] = {}
    mask = None
    for c in config.channels:
        E = stft(_trim(eeg[c], n, edge), config.stft)
        tf, mask = transfer.transfer_function(A, E, config.mask_floor_ratio, envelope.label or "stimulus", c)
        avg = transfer.avg_magnitude(tf)
        channels[c] = ChannelResult(
            tf,
            transfer.log_magnitude_map(tf),
            avg,
            transfer.phase_delay(A, E, mask, circular=config.circular_phase),
            _safe_peaks(avg, config.peak, f"{participant_id}/{c}"),
        )
    if mask is None:
        mask = transfer.excitation_mask(A, config.mask_floor_ratio)

    max_lag = min(config.max_lag, A.shape[0] - 1)
    pairs: dict[tuple[str, str], PairResult] = {}
    for x, y in config.pairs:
        r = crossspectral.csd(channels[x].tf, channels[y].tf, max_lag)
        mag = r.magnitude_series(0)
        pairs[(x, y)] = PairResult(
            r,
            mag,
            crossspectral.coherence_coefficient(channels[x].tf, channels[y].tf),
            _safe_peaks(mag, config.peak, f"{participant_id}/{pair_label((x, y))}"),
        )
    return ParticipantAnalysis(participant_id, env, A, mask, channels, pairs, envelope_result)


def analyze_record(record: ParticipantRecord, config: RunConfig = RunConfig()) -> ParticipantAnalysis:
    """Envelope extraction plus :func:`analyze_signals` for an aligned record."""
    env = extract_envelope(record.stimulus, next(iter(record.channels.values())).sample_rate_hz)
    return analyze_signals(record.participant_id, env.envelope, dict(record.channels), config, env)


def analyze_entry(entry: ManifestEntry, config: RunConfig = RunConfig()) -> ParticipantAnalysis:
    record = load_participant(entry, config.duration_s)
    trimmed = align_and_trim(record, entry.start_s, config.duration_s, entry.audio_start_s)
    return analyze_record(trimmed, config)
