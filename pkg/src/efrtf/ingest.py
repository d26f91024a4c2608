"""Loading EEG recordings, stimulus audio and the participant manifest."""

from __future__ import annotations

import csv
import json
import math
import wave
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .types import SignalRecord

CHANNELS = ("Cz", "P4", "F8", "T7")
EEG_RATE_HZ = 200.0
ANALYSIS_DURATION_S = 120.0
RATE_TOLERANCE = 1e-3
MIN_AUDIO_RATE_HZ = 8000
PAPER_ROSTER = ("s01", "s02", "s03", "s04", "s06", "s08", "s09", "s10", "s11", "s12", "s13", "s14", "s15")


class IngestError(ValueError):
    """Malformed or inconsistent input data."""


class ManifestError(ValueError):
    """Bad or incomplete manifest / participant selection."""


@dataclass(frozen=True)
class ParticipantRecord:
    participant_id: str
    channels: Mapping[str, SignalRecord]
    stimulus: SignalRecord
    language_group: str = ""

    def __post_init__(self):
        missing = [c for c in CHANNELS if c not in self.channels]
        if missing:
            raise IngestError(f"{self.participant_id}: missing channel(s) {', '.join(missing)}")
        lengths = {len(s) for s in self.channels.values()}
        if len(lengths) != 1:
            raise IngestError(f"{self.participant_id}: channels differ in length {sorted(lengths)}")

    @property
    def eeg_duration_s(self) -> float:
        return next(iter(self.channels.values())).duration_s


@dataclass(frozen=True)
class ManifestEntry:
    participant_id: str
    eeg_path: Path
    audio_path: Path
    start_s: float = 0.0
    language_group: str = ""
    audio_start_s: float | None = None
    eeg_format: str = "csv"
    column_map: Mapping[str, str] = field(default_factory=dict)
    timestamp_column: str | None = None


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise IngestError(f"line {line}: column {column!r}: cannot parse {text!r}") from None
    if not math.isfinite(value):
        raise IngestError(f"line {line}: column {column!r}: non-finite value {text!r}")
    return value


def _rows(path: Path, fmt: str):
    with open(path, newline="", encoding="utf-8") as fh:
        if fmt == "csv":
            yield from csv.reader(fh)
        elif fmt == "tabular":
            for raw in fh:
                yield raw.split("\t") if "\t" in raw else raw.split()
        else:
            raise ManifestError(f"unknown EEG format {fmt!r} (expected 'csv' or 'tabular')")


def load_eeg(
    path: str | Path,
    format: str = "csv",
    channels: Sequence[str] = CHANNELS,
    sample_rate_hz: float = EEG_RATE_HZ,
    column_map: Mapping[str, str] | None = None,
    timestamp_column: str | None = None,
) -> dict[str, SignalRecord]:
    """Read one EEG recording into a SignalRecord per channel.

    The first row is a header.  ``column_map`` renames file columns to
    channel names.  A timestamp column (``timestamp_column``, or a leading
    column that is not a channel) must increase strictly and agree with
    ``sample_rate_hz`` within 0.1 %; it is then dropped.  Any unparseable or
    non-finite cell is an error naming its line.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    rows = _rows(path, format)
    try:
        header = [h.strip() for h in next(rows)]
    except StopIteration:
        raise IngestError(f"{path}: empty file") from None
    column_map = dict(column_map or {})
    names = [column_map.get(h, h) for h in header]

    missing = [c for c in channels if c not in names]
    if missing:
        raise IngestError(f"{path}: missing channel column(s): {', '.join(missing)}")
    col_idx = {c: names.index(c) for c in channels}
    if timestamp_column is not None:
        if timestamp_column not in header:
            raise IngestError(f"{path}: timestamp column {timestamp_column!r} not found")
        ts_idx = header.index(timestamp_column)
    else:
        ts_idx = 0 if names[0] not in channels else None

    data = {c: [] for c in channels}
    stamps = []
    for line, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise IngestError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        for c, i in col_idx.items():
            data[c].append(_parse_float(row[i].strip(), line, c))
        if ts_idx is not None:
            stamps.append(_parse_float(row[ts_idx].strip(), line, header[ts_idx]))

    n = len(data[channels[0]])
    if n == 0:
        raise IngestError(f"{path}: no samples")
    if ts_idx is not None and n > 1:
        t = np.asarray(stamps)
        bad = np.flatnonzero(np.diff(t) <= 0)
        if len(bad):
            raise IngestError(f"{path}: timestamps not strictly increasing at line {bad[0] + 3}")
        measured = (n - 1) / (t[-1] - t[0])
        if abs(measured / sample_rate_hz - 1) > RATE_TOLERANCE:
            raise IngestError(
                f"{path}: timestamps imply {measured:.3f} Hz, declared {sample_rate_hz} Hz"
            )
    return {c: SignalRecord(np.asarray(data[c]), sample_rate_hz, c) for c in channels}


def load_audio(path: str | Path) -> SignalRecord:
    """Mono PCM audio in [-1, 1]; stereo is averaged across channels."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise IngestError(f"{path}: unsupported codec or malformed WAV ({exc})") from None
    if width == 2:
        ints = np.frombuffer(raw, dtype="<i2").astype(np.int64)
    elif width == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int64)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
    else:
        raise IngestError(f"{path}: unsupported codec: {8 * width}-bit PCM (need 16 or 24)")
    if rate < MIN_AUDIO_RATE_HZ:
        raise IngestError(f"{path}: sample rate {rate} Hz below {MIN_AUDIO_RATE_HZ} Hz")
    if len(ints) == 0:
        raise IngestError(f"{path}: zero-length audio")
    scaled = ints.reshape(-1, n_channels) / float(1 << (8 * width - 1))
    return SignalRecord(scaled.mean(axis=1), float(rate), "stimulus")


def write_wav(path: str | Path, signal: SignalRecord):
    """16-bit mono PCM; samples are clipped to [-1, 1)."""
    pcm = np.clip(np.round(signal.samples * 32768), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(round(signal.sample_rate_hz)))
        wf.writeframes(pcm.tobytes())


def load_manifest(path: str | Path) -> dict[str, ManifestEntry]:
    """participant_id -> entry; relative paths resolve against the manifest's directory."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must map participant ids to entries")
    base = path.parent
    entries = {}
    for pid, e in raw.items():
        try:
            entries[pid] = ManifestEntry(
                participant_id=pid,
                eeg_path=base / e["eeg_path"],
                audio_path=base / e["audio_path"],
                start_s=float(e.get("start_s", 0.0)),
                language_group=str(e.get("language_group", "")),
                audio_start_s=None if e.get("audio_start_s") is None else float(e["audio_start_s"]),
                eeg_format=e.get("eeg_format", "csv"),
                column_map=dict(e.get("column_map", {})),
                timestamp_column=e.get("timestamp_column"),
            )
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{path}: entry {pid!r} lacks or mistypes {exc}") from None
    return entries


def load_participant(entry: ManifestEntry, min_duration_s: float = ANALYSIS_DURATION_S) -> ParticipantRecord:
    channels = load_eeg(
        entry.eeg_path, entry.eeg_format, column_map=entry.column_map, timestamp_column=entry.timestamp_column
    )
    record = ParticipantRecord(entry.participant_id, channels, load_audio(entry.audio_path), entry.language_group)
    if record.eeg_duration_s < min_duration_s:
        raise IngestError(
            f"{entry.participant_id}: EEG lasts {record.eeg_duration_s:.2f} s, need {min_duration_s} s"
        )
    return record


def _cut(sig: SignalRecord, start_s: float, duration_s: float, what: str) -> SignalRecord:
    i0 = int(round(start_s * sig.sample_rate_hz))
    n = int(round(duration_s * sig.sample_rate_hz))
    if i0 < 0 or i0 + n > len(sig):
        raise IngestError(
            f"{what}: window [{start_s}, {start_s + duration_s}) s exceeds recording of {sig.duration_s:.3f} s"
        )
    return sig.with_samples(sig.samples[i0 : i0 + n])


def align_and_trim(
    record: ParticipantRecord,
    start_s: float,
    duration_s: float = ANALYSIS_DURATION_S,
    audio_start_s: float | None = None,
) -> ParticipantRecord:
    """Cut every signal to ``[start_s, start_s + duration_s)``.

    ``audio_start_s`` cuts the stimulus from a different offset when the
    audio file starts at the stimulus onset rather than with the EEG.
    """
    a0 = start_s if audio_start_s is None else audio_start_s
    channels = {c: _cut(s, start_s, duration_s, f"{record.participant_id}/{c}") for c, s in record.channels.items()}
    stimulus = _cut(record.stimulus, a0, duration_s, f"{record.participant_id}/stimulus")
    return ParticipantRecord(record.participant_id, channels, stimulus, record.language_group)
