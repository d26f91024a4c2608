"""Envelope-following-response analysis as a linear time-varying system.

The stimulus envelope is the excitation and each EEG channel a response.
The package estimates per-frame transfer functions, time-averaged
magnitude and phase delay, cross-channel CSD and coherence, and dominant
response peaks aggregated across participants.
"""

__version__ = "0.1.0"

from .crossspectral import CsdResult, coherence_coefficient, csd
from .envelope import EnvelopeResult, extract_envelope
from .filtering import FirFilter, FirSpec, analytic_signal, apply_filter, design_lowpass
from .ingest import CHANNELS, ManifestEntry, ParticipantRecord, load_audio, load_eeg, load_manifest
from .peaks import Peak, PeakHistogram, aggregate_histogram, detect_peaks
from .pipeline import ParticipantAnalysis, PeakConfig, RunConfig, analyze_entry, analyze_record, analyze_signals
from .spectral import StftConfig, WindowKind, stft
from .synth import SynthSystem, broadband_excitation, generate
from .transfer import TfMask, avg_magnitude, log_magnitude_map, phase_delay, transfer_function
from .types import ComplexSpectrogram, FrequencySeries, SeriesKind, SignalRecord, TransferFunction, bin_freq

__all__ = [
    "CHANNELS",
    "ComplexSpectrogram",
    "CsdResult",
    "EnvelopeResult",
    "FirFilter",
    "FirSpec",
    "FrequencySeries",
    "ManifestEntry",
    "ParticipantAnalysis",
    "ParticipantRecord",
    "Peak",
    "PeakConfig",
    "PeakHistogram",
    "RunConfig",
    "SeriesKind",
    "SignalRecord",
    "StftConfig",
    "SynthSystem",
    "TfMask",
    "TransferFunction",
    "WindowKind",
    "aggregate_histogram",
    "analytic_signal",
    "analyze_entry",
    "analyze_record",
    "analyze_signals",
    "apply_filter",
    "avg_magnitude",
    "bin_freq",
    "broadband_excitation",
    "coherence_coefficient",
    "csd",
    "design_lowpass",
    "detect_peaks",
    "extract_envelope",
    "generate",
    "load_audio",
    "load_eeg",
    "load_manifest",
    "log_magnitude_map",
    "phase_delay",
    "stft",
    "transfer_function",
]
