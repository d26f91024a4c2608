"""Qualitative checks of published EFR findings against aggregate outputs.

Absolute magnitudes are not comparable across implementations (STFT scaling
and preprocessing differ), so only peak locations are checked: one
participant's alpha-band peak and histogram bands with elevated counts.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .peaks import Peak, PeakHistogram

ALPHA_PARTICIPANT = "s04"
ALPHA_CHANNEL = "Cz"
ALPHA_BAND_HZ = (8.0, 13.0)
CHANNEL_BANDS_HZ = ((8.0, 11.0), (53.0, 56.0), (78.0, 81.0))
CSD_BANDS_HZ = ((10.0, 13.0), (27.0, 29.0), (62.0, 64.0))
ELEVATION_FACTOR = 3.0


@dataclass
class BandCheck:
    histogram: str
    label: str
    band_hz: tuple[float, float]
    best_count: int
    threshold: float
    elevated: bool

    def line(self) -> str:
        lo, hi = self.band_hz
        return (f"{self.histogram}/{self.label} {lo:g}-{hi:g} Hz: max count {self.best_count} "
                f"vs threshold {self.threshold:g} -> {'elevated' if self.elevated else 'not elevated'}")


@dataclass
class ReproductionReport:
    alpha_peak_hz: list[float]
    alpha_ok: bool
    channel_bands: list[BandCheck] = field(default_factory=list)
    csd_bands: list[BandCheck] = field(default_factory=list)

    @property
    def channel_ok(self) -> bool:
        return all(b.elevated for b in self.channel_bands)

    @property
    def csd_ok(self) -> bool:
        return all(b.elevated for b in self.csd_bands)

    def lines(self) -> list[str]:
        alpha = ", ".join(f"{f:g}" for f in self.alpha_peak_hz) or "none"
        out = [f"{ALPHA_PARTICIPANT} {ALPHA_CHANNEL} peaks in {ALPHA_BAND_HZ[0]:g}-{ALPHA_BAND_HZ[1]:g} Hz: {alpha}"]
        return out + [b.line() for b in self.channel_bands + self.csd_bands]

    def to_dict(self) -> dict:
        def bands(items):
            return [b.__dict__ | {"band_hz": list(b.band_hz)} for b in items]

        return {
            "alpha_peak_hz": self.alpha_peak_hz,
            "alpha_ok": self.alpha_ok,
            "channel_ok": self.channel_ok,
            "csd_ok": self.csd_ok,
            "channel_bands": bands(self.channel_bands),
            "csd_bands": bands(self.csd_bands),
        }


def alpha_peaks(peaks: Sequence[Peak], band_hz=ALPHA_BAND_HZ) -> list[float]:
    lo, hi = band_hz
    return [p.freq_hz for p in peaks if lo <= p.freq_hz <= hi]


def band_check(name: str, label: str, counts: np.ndarray, edges: np.ndarray, band_hz,
               factor: float = ELEVATION_FACTOR) -> BandCheck:
    """Is some histogram bin inside ``band_hz`` at least ``factor`` x the median bin count?

    A bin belongs to the band when its lower edge lies in [lo, hi], so a peak
    at exactly ``hi`` Hz counts.  With sparse histograms the median is often
    0, so at least one count is also required.
    """
    lo, hi = band_hz
    inside = (edges[:-1] >= lo - 1e-9) & (edges[:-1] <= hi + 1e-9)
    threshold = max(factor * float(np.median(counts)), 1.0)
    best = int(counts[inside].max()) if inside.any() else 0
    return BandCheck(name, label, (lo, hi), best, threshold, best >= threshold)


def check_reproduction(
    channel_peaks: Mapping[str, Mapping[str, Sequence[Peak]]],
    channel_hist: PeakHistogram,
    csd_hist: PeakHistogram,
) -> ReproductionReport:
    """``channel_peaks[participant][channel]`` gives the detected channel peaks.

    The channel-band check pools all channels into one histogram; the CSD-band
    check runs separately for every pair.
    """
    found = alpha_peaks(channel_peaks.get(ALPHA_PARTICIPANT, {}).get(ALPHA_CHANNEL, []))
    report = ReproductionReport(found, bool(found))
    pooled = np.sum([np.asarray(c) for c in channel_hist.counts.values()], axis=0)
    for band in CHANNEL_BANDS_HZ:
        report.channel_bands.append(band_check("channel", "all", pooled, channel_hist.bin_edges_hz, band))
    for label, counts in csd_hist.counts.items():
        for band in CSD_BANDS_HZ:
            report.csd_bands.append(band_check("csd", label, np.asarray(counts), csd_hist.bin_edges_hz, band))
    return report
