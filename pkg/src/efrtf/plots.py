"""Optional SVG figures; every quantity plotted here is also written as CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .peaks import PeakHistogram  # noqa: E402
from .pipeline import ParticipantAnalysis, pair_label  # noqa: E402
from .types import SignalRecord  # noqa: E402

# fixed ids and no timestamp, so reruns give identical SVG bytes
plt.rcParams["svg.hashsalt"] = "efrtf"
SVG_META = {"Date": None, "Creator": None}


def _save(fig, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)


def envelope_figure(path: Path, audio: SignalRecord, envelope: SignalRecord, max_freq_hz: float = 100.0):
    """Waveform with its envelope, and both spectra up to ``max_freq_hz``."""
    fig, (ax_t, ax_s, ax_e) = plt.subplots(3, 1, figsize=(8, 8))
    t_a = np.arange(len(audio)) / audio.sample_rate_hz
    t_e = np.arange(len(envelope)) / envelope.sample_rate_hz
    step = max(1, len(audio) // 20000)
    ax_t.plot(t_a[::step], audio.samples[::step], lw=0.3, label="stimulus")
    ax_t.plot(t_e, envelope.samples, lw=0.8, label="envelope")
    ax_t.set_xlabel("time (s)")
    ax_t.legend(loc="upper right")
    for ax, sig, title in ((ax_s, audio, "stimulus spectrum"), (ax_e, envelope, "envelope spectrum")):
        spec = np.abs(np.fft.rfft(sig.samples))
        f = np.fft.rfftfreq(len(sig), 1 / sig.sample_rate_hz)
        keep = f <= max_freq_hz
        ax.plot(f[keep], spec[keep], lw=0.6)
        ax.set_title(title)
        ax.set_xlabel("frequency (Hz)")
    fig.tight_layout()
    _save(fig, Path(path))


def participant_figures(directory: Path, analysis: ParticipantAnalysis):
    directory = Path(directory)
    chans = list(analysis.channels)

    fig, axes = plt.subplots(len(chans), 1, figsize=(8, 2.2 * len(chans)), squeeze=False)
    for ax, c in zip(axes[:, 0], chans):
        res = analysis.channels[c]
        t, f = res.tf.frame_times_s, res.tf.bin_freqs_hz
        dt = t[1] - t[0] if len(t) > 1 else 1.0
        df = f[1] - f[0]
        extent = (t[0] - dt / 2, t[-1] + dt / 2, f[0] - df / 2, f[-1] + df / 2)
        im = ax.imshow(res.log_magnitude.T, origin="lower", aspect="auto", extent=extent, interpolation="nearest")
        ax.set_ylabel(f"{c}\nfrequency (Hz)")
        fig.colorbar(im, ax=ax, label="log10|H|")
    axes[-1, 0].set_xlabel("time (s)")
    fig.tight_layout()
    _save(fig, directory / "log_magnitude_maps.svg")

    fig, ax = plt.subplots(2, 2, figsize=(10, 7))
    f = analysis.bin_freqs_hz
    for c in chans:
        res = analysis.channels[c]
        ax[0, 0].plot(f, np.where(res.avg_magnitude.valid, res.avg_magnitude.values, np.nan), label=c)
        ax[0, 1].plot(f, np.where(res.phase_delay.valid, res.phase_delay.values, np.nan), label=c)
    for pair, res in analysis.pairs.items():
        ax[1, 0].plot(f, np.where(res.csd_magnitude.valid, res.csd_magnitude.values, np.nan), label=pair_label(pair))
        ax[1, 1].plot(f, np.where(res.coherence.valid, res.coherence.values, np.nan), label=pair_label(pair))
    titles = ["time-averaged |H|", "phase delay (rad)", "zero-lag |CSD|", "coherence coefficient"]
    for a, title in zip(ax.flat, titles):
        a.set_title(title)
        a.set_xlabel("frequency (Hz)")
        a.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, directory / "frequency_metrics.svg")


def histogram_figure(path: Path, hist: PeakHistogram, title: str):
    labels = list(hist.counts)
    fig, axes = plt.subplots(len(labels), 1, figsize=(8, 1.6 * len(labels) + 0.5), sharex=True, squeeze=False)
    lo = hist.bin_edges_hz[:-1]
    widths = np.diff(hist.bin_edges_hz)
    for ax, label in zip(axes[:, 0], labels):
        ax.bar(lo, hist.counts[label], width=widths, align="edge")
        ax.set_ylabel(label)
    axes[0, 0].set_title(f"{title} ({hist.n_participants} participants)")
    axes[-1, 0].set_xlabel("frequency (Hz)")
    fig.tight_layout()
    _save(fig, Path(path))
