"""CSV/JSON emission of analysis results.

Every file is written to a temporary sibling and renamed into place.
Floats use Python's shortest round-trip repr, so identical results give
byte-identical files.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import shutil
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np

from .peaks import Peak, PeakHistogram
from .pipeline import ParticipantAnalysis, RunConfig, pair_label
from .types import FrequencySeries


def fmt(v) -> str:
    v = float(v)
    return repr(v) if np.isfinite(v) else ""


def atomic_write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def write_json(path: Path, obj, compact: bool = False):
    """``compact`` skips indentation, which lets the C encoder handle large arrays."""
    if compact:
        text = json.dumps(obj, separators=(",", ":"), allow_nan=False)
    else:
        text = json.dumps(obj, indent=1, allow_nan=False)
    atomic_write_text(path, text + "\n")


def series_rows(series: FrequencySeries):
    for f, v, ok in zip(series.bin_freqs_hz, series.values, series.valid):
        yield fmt(f), fmt(v) if ok else "", int(ok)


def write_series_csv(path: Path, series: FrequencySeries):
    write_csv(path, ["freq_hz", "value", "valid"], series_rows(series))


def write_signal_csv(path: Path, samples: np.ndarray, sample_rate_hz: float, column: str):
    t = np.arange(len(samples)) / sample_rate_hz
    write_csv(path, ["time_s", column], ((fmt(a), fmt(b)) for a, b in zip(t, samples)))


def write_log_map_csv(path: Path, frame_times_s, bin_freqs_hz, log_map):
    header = ["time_s"] + [fmt(f) for f in bin_freqs_hz]
    write_csv(path, header, ([fmt(t)] + [fmt(v) for v in row] for t, row in zip(frame_times_s, log_map)))


def peak_rows(participant: str, peaks_by_label: Mapping[str, Sequence[Peak]], order: Sequence[str]):
    rank = {label: i for i, label in enumerate(order)}
    rows = [
        (pk.freq_hz, rank[label], participant, label, pk)
        for label, pks in peaks_by_label.items()
        for pk in pks
    ]
    rows.sort(key=lambda r: (r[0], r[2], r[1]))
    return [[pid, label, fmt(pk.freq_hz), fmt(pk.magnitude), fmt(pk.width_hz), fmt(pk.prominence)]
            for _, _, pid, label, pk in rows]


PEAK_HEADER = ["participant", "{label}", "peak_freq_hz", "magnitude", "width_hz", "prominence"]


def peak_header(label_column: str) -> list[str]:
    return [h.format(label=label_column) for h in PEAK_HEADER]


def write_participant(directory: Path, analysis: ParticipantAnalysis, config: RunConfig, plots: bool = False):
    """All per-participant outputs under ``directory`` (created)."""
    d = Path(directory)
    write_json(d / "resolved_config.json", config.to_dict() | {"participant_id": analysis.participant_id})
    if analysis.envelope_result is not None:
        write_json(d / "envelope_params.json", analysis.envelope_result.params | {
            "clamp_count": analysis.envelope_result.clamp_count,
            "max_clamp": analysis.envelope_result.max_clamp,
        })
    write_signal_csv(d / "envelope.csv", analysis.envelope.samples, analysis.envelope.sample_rate_hz, "envelope")

    for c, res in analysis.channels.items():
        cd = d / "channels"
        write_log_map_csv(cd / f"{c}_log_magnitude.csv", res.tf.frame_times_s, res.tf.bin_freqs_hz, res.log_magnitude)
        write_series_csv(cd / f"{c}_avg_magnitude.csv", res.avg_magnitude)
        write_series_csv(cd / f"{c}_phase_delay.csv", res.phase_delay)
        write_json(cd / f"{c}_transfer.json", {
            "transfer_function": res.tf.to_dict(),
            "log_magnitude": [[None if not np.isfinite(v) else float(v) for v in row] for row in res.log_magnitude],
            "avg_magnitude": res.avg_magnitude.to_dict(),
            "phase_delay": res.phase_delay.to_dict(),
        }, compact=True)

    for pair, res in analysis.pairs.items():
        z = res.csd.zero_lag()
        valid0 = res.csd.valid[res.csd.row(0)] & res.coherence.valid
        rows = (
            [fmt(f), fmt(abs(v)) if ok else "", fmt(np.angle(v)) if ok else "", fmt(c) if ok else "", int(ok)]
            for f, v, c, ok in zip(res.csd.bin_freqs_hz, z, res.coherence.values, valid0)
        )
        pd_ = d / "pairs"
        write_csv(pd_ / f"{pair_label(pair)}.csv",
                  ["freq_hz", "csd_mag_zero_lag", "csd_phase_zero_lag", "coherence", "valid"], rows)
        write_json(pd_ / f"{pair_label(pair)}_csd.json", res.csd.to_dict(), compact=True)

    order = list(analysis.channels)
    write_csv(d / "channel_peaks.csv", peak_header("channel"),
              peak_rows(analysis.participant_id, {c: r.peaks for c, r in analysis.channels.items()}, order))
    pair_order = [pair_label(p) for p in analysis.pairs]
    write_csv(d / "csd_peaks.csv", peak_header("pair"),
              peak_rows(analysis.participant_id, {pair_label(p): r.peaks for p, r in analysis.pairs.items()},
                        pair_order))
    if plots:
        from . import plots as plotting

        plotting.participant_figures(d / "plots", analysis)


@contextlib.contextmanager
def staged_directory(final: Path):
    """Yield a scratch directory that replaces ``final`` only if the block succeeds."""
    final = Path(final)
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=final.parent, prefix=f".{final.name}.", suffix=".tmp"))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)


def histogram_rows(hist: PeakHistogram):
    labels = list(hist.counts)
    for i in range(len(hist.bin_edges_hz) - 1):
        yield [fmt(hist.bin_edges_hz[i]), fmt(hist.bin_edges_hz[i + 1])] + [int(hist.counts[l][i]) for l in labels]


def write_histogram(directory: Path, name: str, hist: PeakHistogram):
    write_json(Path(directory) / f"{name}.json", hist.to_dict())
    write_csv(Path(directory) / f"{name}.csv", ["bin_lo_hz", "bin_hi_hz"] + list(hist.counts), histogram_rows(hist))
