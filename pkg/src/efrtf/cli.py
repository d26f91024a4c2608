"""Batch command-line driver.

Exit codes: 0 success, 1 analysis or oracle failure, 2 I/O error,
3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import wave
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .envelope import extract_envelope
from .filtering import FilterDesignError
from .ingest import PAPER_ROSTER, IngestError, ManifestError, load_audio, load_manifest
from .peaks import aggregate_histogram
from .pipeline import ParticipantAnalysis, PeakConfig, RunConfig, analyze_entry, pair_label
from .report import (
    peak_header,
    peak_rows,
    staged_directory,
    write_histogram,
    write_csv,
    write_json,
    write_signal_csv,
)
from .spectral import StftConfig, WindowKind

log = logging.getLogger("efrtf")

EXIT_OK, EXIT_ANALYSIS, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    parse.__name__ = kind.__name__
    return parse


def _analysis_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("analysis parameters")
    g.add_argument("--window-s", type=_positive(float), default=1.0, help="STFT window length in seconds")
    g.add_argument("--hop-s", type=_positive(float), default=0.5, help="STFT hop in seconds")
    g.add_argument("--window-kind", choices=[k.value for k in WindowKind], default="hann")
    g.add_argument("--mask-floor", type=float, default=1e-3,
                   help="mask bins with |A| below this fraction of max |A|")
    g.add_argument("--peak-height-frac", type=float, default=0.5)
    g.add_argument("--peak-min-sep-hz", type=float, default=10.0)
    g.add_argument("--bin-width-hz", type=_positive(float), default=1.0, help="histogram bin width")
    g.add_argument("--max-lag", type=int, default=10, help="largest CSD frame lag")
    g.add_argument("--circular-phase", action="store_true", help="average phase delay as unit phasors")
    g.add_argument("--emit-plots", action="store_true", help="also write SVG figures")
    g.add_argument("--jobs", type=_positive(int), default=None, help="worker threads (default: CPU count)")
    g.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="efrtf", description="Envelope-following-response transfer-function analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("envelope", help="extract the 200 Hz envelope of a WAV file")
    e.add_argument("audio", type=Path)
    e.add_argument("--out", type=Path, required=True, help="envelope CSV path")
    e.add_argument("--rate-hz", type=_positive(float), default=200.0)
    e.add_argument("--emit-plots", action="store_true", help="write <out>.svg with waveform and spectra")

    a = sub.add_parser("analyze", help="analyse one participant from a manifest")
    a.add_argument("--manifest", type=Path, required=True)
    a.add_argument("--participant", required=True)
    a.add_argument("--out", type=Path, required=True, help="results go to <out>/<participant>")
    _analysis_flags(a)

    g = sub.add_parser("aggregate", help="analyse every participant and build peak histograms")
    g.add_argument("--manifest", type=Path, required=True)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--check-reproduction", action="store_true",
                   help="compare peak locations with the published dataset findings")
    _analysis_flags(g)

    s = sub.add_parser("selftest", help="run the synthetic oracle suite")
    s.add_argument("--out", type=Path, default=None, help="directory for selftest.json")

    y = sub.add_parser("synth", help="write a synthetic dataset (WAV stimuli, EEG CSV, manifest)")
    y.add_argument("--out", type=Path, required=True)
    y.add_argument("--system", choices=["identity", "resonance"], default="identity")
    y.add_argument("--participants", type=int, default=len(PAPER_ROSTER),
                   help=f"number of participants, ids taken from the study roster (max {len(PAPER_ROSTER)})")
    y.add_argument("--duration-s", type=_positive(float), default=120.0)
    y.add_argument("--audio-rate-hz", type=_positive(float), default=8000.0)
    y.add_argument("--noise-rms", type=float, default=0.02, help="sensor noise for the resonance system")
    y.add_argument("--seed", type=int, default=0)
    return p


def run_config(args) -> RunConfig:
    for name in ("mask_floor", "peak_height_frac"):
        v = getattr(args, name)
        if not 0 <= v < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must lie in [0, 1), got {v}")
    if args.peak_min_sep_hz < 0 or args.max_lag < 0:
        raise ConfigError("--peak-min-sep-hz and --max-lag must be >= 0")
    try:
        stft_cfg = StftConfig(args.window_s, args.hop_s, WindowKind(args.window_kind))
        stft_cfg.samples(200.0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(
        manifest_path=args.manifest,
        output_dir=args.out,
        stft=stft_cfg,
        mask_floor_ratio=args.mask_floor,
        peak=PeakConfig(args.peak_height_frac, args.peak_min_sep_hz, args.bin_width_hz),
        emit_plots=args.emit_plots,
        jobs=args.jobs,
        seed=args.seed,
        max_lag=args.max_lag,
        circular_phase=args.circular_phase,
    )


def _write_participant(out_dir: Path, analysis: ParticipantAnalysis, config: RunConfig):
    from .report import write_participant

    with staged_directory(out_dir / analysis.participant_id) as tmp:
        write_participant(tmp, analysis, config, plots=config.emit_plots)


def cmd_envelope(args) -> int:
    audio = load_audio(args.audio)
    res = extract_envelope(audio, args.rate_hz)
    write_signal_csv(args.out, res.envelope.samples, res.envelope.sample_rate_hz, "envelope")
    if args.emit_plots:
        from .plots import envelope_figure

        envelope_figure(args.out.with_suffix(".svg"), audio, res.envelope)
    log.info("wrote %d envelope samples to %s", len(res.envelope), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = run_config(args)
    entries = load_manifest(args.manifest)
    if args.participant not in entries:
        raise ConfigError(f"participant {args.participant!r} not in manifest {args.manifest}")
    analysis = analyze_entry(entries[args.participant], config)
    _write_participant(args.out, analysis, config)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    config = run_config(args)
    entries = load_manifest(args.manifest)
    if not entries:
        raise ConfigError(f"manifest {args.manifest} lists no participants")
    if len(entries) < 2:
        log.warning("only %d participant; histograms are not cross-participant", len(entries))
    pids = sorted(entries)
    jobs = config.jobs or os.cpu_count() or 1

    def run(pid):
        analysis = analyze_entry(entries[pid], config)
        _write_participant(args.out, analysis, config)
        log.info("%s done", pid)
        return analysis

    with ThreadPoolExecutor(max_workers=min(jobs, len(pids))) as pool:
        analyses = dict(zip(pids, pool.map(run, pids)))

    channel_peaks = {pid: {c: r.peaks for c, r in a.channels.items()} for pid, a in analyses.items()}
    csd_peaks = {pid: {pair_label(p): r.peaks for p, r in a.pairs.items()} for pid, a in analyses.items()}
    bw = config.peak.bin_width_hz
    channel_hist = aggregate_histogram(channel_peaks, bw, list(config.channels))
    csd_hist = aggregate_histogram(csd_peaks, bw, [pair_label(p) for p in config.pairs])

    out = Path(args.out)
    write_json(out / "resolved_config.json", config.to_dict() | {"participants": pids})
    hist_dir = out / "histograms"
    write_histogram(hist_dir, "channel_peaks", channel_hist)
    write_histogram(hist_dir, "csd_peaks", csd_hist)
    for name, peaks_by, column, order in (
        ("channel_peaks", channel_peaks, "channel", list(config.channels)),
        ("csd_peaks", csd_peaks, "pair", [pair_label(p) for p in config.pairs]),
    ):
        rows = [r for pid in pids for r in peak_rows(pid, peaks_by[pid], order)]
        rank = {label: i for i, label in enumerate(order)}
        rows.sort(key=lambda r: (float(r[2]), r[0], rank[r[1]]))
        write_csv(out / f"{name}.csv", peak_header(column), rows)
    if config.emit_plots:
        from .plots import histogram_figure

        histogram_figure(hist_dir / "channel_peaks.svg", channel_hist, "channel peak frequencies")
        histogram_figure(hist_dir / "csd_peaks.svg", csd_hist, "zero-lag CSD peak frequencies")

    if args.check_reproduction:
        from .reproduction import check_reproduction

        report = check_reproduction(channel_peaks, channel_hist, csd_hist)
        for line in report.lines():
            print(line)
        write_json(out / "reproduction.json", report.to_dict())
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(args.out, sys.stdout)
    return EXIT_OK if all(r.ok for r in results) else EXIT_ANALYSIS


def cmd_synth(args) -> int:
    from .synthset import identity_factory, resonance_factory, write_synthetic_dataset

    if not 1 <= args.participants <= len(PAPER_ROSTER):
        raise ConfigError(f"--participants must lie in [1, {len(PAPER_ROSTER)}]")
    if args.noise_rms < 0:
        raise ConfigError("--noise-rms must be >= 0")
    factory = identity_factory if args.system == "identity" else resonance_factory(noise_rms=args.noise_rms,
                                                                                  seed=args.seed)
    path = write_synthetic_dataset(args.out, factory, PAPER_ROSTER[: args.participants], args.seed,
                                   args.duration_s, args.audio_rate_hz)
    print(path)
    return EXIT_OK


COMMANDS = {
    "envelope": cmd_envelope,
    "analyze": cmd_analyze,
    "aggregate": cmd_aggregate,
    "selftest": cmd_selftest,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename is not None else str(exc).removeprefix("file not found: ")
        print(f"efrtf: file not found: {name}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ManifestError) as exc:
        print(f"efrtf: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, wave.Error, EOFError, OSError) as exc:
        print(f"efrtf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FilterDesignError, ValueError, KeyError, ArithmeticError) as exc:
        print(f"efrtf: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
