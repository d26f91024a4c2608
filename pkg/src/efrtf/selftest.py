"""Synthetic oracle suite: known systems in, recovered metrics checked.

Each check returns an :class:`OracleResult`; :func:`run_selftest` prints one
``oracle: <name> OK|FAIL`` line per check.  Everything is seeded, so two runs
print and write the same bytes.
"""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from . import crossspectral, transfer
from .spectral import StftConfig, stft
from .synth import (
    SynthSystem,
    broadband_excitation,
    generate,
    multitone_bins,
    multitone_excitation,
)
from .synthset import resonance_profile, resonator_taps
from .types import ComplexSpectrogram, SignalRecord

DURATION_S = 120.0
MAG_RMS_TOL = 0.05
PHASE_TOL_RAD = 0.05
COHERENCE_MIN = 0.9
NOISE_COHERENCE_MEDIAN_MAX = 0.15
CONTRAST_MIN_DB = 6.0

# Short non-causal FIR with arg G within ~0.5 rad of pi on every bin, so the
# arithmetic phase mean is well-posed everywhere.
RECOVERY_TAPS = (-0.15, -0.3, -1.0, -0.6, -0.25)
RECOVERY_ORIGIN = 2


@dataclass
class OracleResult:
    name: str
    ok: bool
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        detail = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.metrics.items())
        return f"oracle: {self.name} {'OK' if self.ok else 'FAIL'}" + (f" ({detail})" if detail else "")


def phase_error(a, b) -> np.ndarray:
    """Absolute circular distance between angles, in [0, pi]."""
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


def run_system(system: SynthSystem, excitation: SignalRecord, config: StftConfig = StftConfig(),
               floor_ratio: float = transfer.DEFAULT_FLOOR_RATIO, circular: bool = False):
    """Spectrograms, transfer function, and time-averaged metrics for one synthetic pair."""
    A = stft(excitation, config)
    E = stft(generate(system, excitation), config)
    tf, mask = transfer.transfer_function(A, E, floor_ratio)
    return {
        "A": A,
        "E": E,
        "tf": tf,
        "mask": mask,
        "avg": transfer.avg_magnitude(tf),
        "phase": transfer.phase_delay(A, E, mask, circular=circular),
    }


def recovery_errors(system: SynthSystem, excitation: SignalRecord, bins=None, circular=False):
    """Relative RMS magnitude error and max phase error against ``system.response``."""
    r = run_system(system, excitation, circular=circular)
    keep = r["avg"].valid & r["phase"].valid
    if bins is not None:
        sel = np.zeros_like(keep)
        sel[bins] = True
        keep &= sel
    g = system.response(r["avg"].bin_freqs_hz)
    mag_err = (r["avg"].values[keep] - np.abs(g[keep])) / np.abs(g[keep])
    ph_err = phase_error(r["phase"].values[keep], np.angle(g[keep]))
    return float(np.sqrt(np.mean(mag_err**2))), float(ph_err.max()), int(keep.sum()), r


def check_identity(seed: int = 1) -> OracleResult:
    r = run_system(SynthSystem.identity(), broadband_excitation(DURATION_S, seed))
    dev = float(np.abs(np.abs(r["tf"].values[r["tf"].valid]) - 1).max())
    return OracleResult("identity", dev <= 1e-9, {"max_dev": dev})


def check_gain(seed: int = 2) -> OracleResult:
    r = run_system(SynthSystem.gain(3.0), broadband_excitation(DURATION_S, seed))
    dev = float(np.abs(np.abs(r["tf"].values[r["tf"].valid]) - 3).max())
    return OracleResult("gain", dev <= 1e-9, {"max_dev": dev})


def check_delay(seed: int = 3, samples: int = 10) -> OracleResult:
    bins = multitone_bins()
    system = SynthSystem.delay(samples)
    mag_rms, ph_max, n, _ = recovery_errors(system, multitone_excitation(DURATION_S, seed), bins)
    ok = ph_max <= PHASE_TOL_RAD and mag_rms <= MAG_RMS_TOL and n == len(bins)
    return OracleResult("delay", ok, {"phase_max_err": ph_max, "mag_rms_err": mag_rms, "bins": n})


def check_fir_recovery(seed: int = 4) -> OracleResult:
    system = SynthSystem.fir(RECOVERY_TAPS, RECOVERY_ORIGIN)
    mag_rms, ph_max, n, _ = recovery_errors(system, broadband_excitation(DURATION_S, seed))
    ok = mag_rms <= MAG_RMS_TOL and ph_max <= PHASE_TOL_RAD
    return OracleResult("fir-recovery", ok, {"mag_rms_err": mag_rms, "phase_max_err": ph_max, "bins": n})


def check_causal_fir_circular(seed: int = 5) -> OracleResult:
    system = SynthSystem.fir((1.0, 0.5), 0)
    mag_rms, ph_max, n, _ = recovery_errors(system, broadband_excitation(DURATION_S, seed), circular=True)
    ok = mag_rms <= MAG_RMS_TOL and ph_max <= PHASE_TOL_RAD
    return OracleResult("causal-fir-circular", ok, {"mag_rms_err": mag_rms, "phase_max_err": ph_max, "bins": n})


def check_profile(seed: int = 6) -> OracleResult:
    mag, phase = resonance_profile()
    system = SynthSystem.gain_phase_profile(mag, phase)
    mag_rms, ph_max, n, r = recovery_errors(system, broadband_excitation(DURATION_S, seed), circular=True)
    avg = r["avg"]
    peak_hz = float(avg.bin_freqs_hz[np.argmax(np.where(avg.valid, avg.values, -np.inf))])
    ok = mag_rms <= MAG_RMS_TOL and ph_max <= PHASE_TOL_RAD and abs(peak_hz - 11.0) <= 1.0
    return OracleResult("gain-phase-profile", ok,
                        {"mag_rms_err": mag_rms, "phase_max_err": ph_max, "peak_hz": peak_hz})


def check_coherence(seed: int = 7, snr_db: float = 20.0) -> OracleResult:
    """Two noisy responses of one system: coherence high on driven bins."""
    bins = multitone_bins()
    x = multitone_excitation(DURATION_S, seed)
    noise = 10 ** (-snr_db / 20)  # excitation and delay response are unit RMS
    A = stft(x)
    tfs = []
    for s in (seed * 10 + 1, seed * 10 + 2):
        E = stft(generate(SynthSystem.delay(7, noise, s), x))
        tfs.append(transfer.transfer_function(A, E)[0])
    c = crossspectral.coherence_coefficient(*tfs)
    in_range = bool(np.all((c.values >= 0) & (c.values <= 1)))
    c_min = float(c.values[bins].min())
    ok = in_range and c_min > COHERENCE_MIN and bool(c.valid[bins].all())
    return OracleResult("coherence", ok, {"min_driven": c_min, "in_unit_interval": in_range})


def check_noise_coherence(seed: int = 8) -> OracleResult:
    """Responses that are pure independent noise: coherence near zero."""
    x = multitone_excitation(DURATION_S, seed)
    A = stft(x)
    tfs = []
    for s in (seed * 10 + 1, seed * 10 + 2):
        e = np.random.default_rng(s).standard_normal(len(x))
        tfs.append(transfer.transfer_function(A, stft(x.with_samples(e)))[0])
    c = crossspectral.coherence_coefficient(*tfs)
    med = float(np.median(c.values[c.valid]))
    m = A.shape[0]
    ok = med < NOISE_COHERENCE_MEDIAN_MAX and m >= 200 and bool(np.all((c.values >= 0) & (c.values <= 1)))
    return OracleResult("noise-coherence", ok, {"median": med, "frames": m})


def check_time_varying(seed: int = 9, switch_s: float = 60.0) -> OracleResult:
    """FIR swap at ``switch_s``: the log map contrast between halves matches the design."""
    taps2, origin = resonator_taps(30.0, peak_gain=3.0)
    taps1 = np.zeros_like(taps2)
    taps1[origin] = 1.0
    system = SynthSystem.time_varying([(0.0, taps1), (switch_s, taps2)], origin)
    r = run_system(system, broadband_excitation(DURATION_S, seed))
    tf = r["tf"]
    log_map = transfer.log_magnitude_map(tf)
    cfg = StftConfig()
    fs = tf.sample_rate_hz
    win = cfg.samples(fs)[0] / fs
    # frames wholly inside one segment, away from the FIR start-up at the swap
    guard = len(taps2) / fs
    first = tf.frame_times_s + win <= switch_s
    second = tf.frame_times_s >= switch_s + guard
    designed = 20 * np.log10(np.abs(SynthSystem.fir(taps2, origin).response(tf.bin_freqs_hz, fs)))
    altered = designed >= CONTRAST_MIN_DB
    mean1 = np.nanmean(np.where(first[:, None], log_map, np.nan), axis=0)
    mean2 = np.nanmean(np.where(second[:, None], log_map, np.nan), axis=0)
    measured = 20 * (mean2 - mean1)
    err = float(np.abs(measured[altered] - designed[altered]).max())
    worst = float(measured[altered].min())
    ok = bool(altered.any()) and worst >= CONTRAST_MIN_DB and err <= 1.0
    return OracleResult("time-varying", ok,
                        {"altered_bins": int(altered.sum()), "min_contrast_db": worst, "max_err_db": err})


def _replace_values(spec: ComplexSpectrogram, values: np.ndarray) -> ComplexSpectrogram:
    return dataclasses.replace(spec, values=values)


def check_mask_honesty(seed: int = 10, frac: float = 0.05) -> OracleResult:
    """Garbage in masked bins must not reach any output.

    Random excitation bins are zeroed (always masked); the response at those
    bins is then replaced by huge values.  Every derived quantity must stay
    identical, and masked bins must report as invalid.
    """
    rng = np.random.default_rng(seed)
    x = broadband_excitation(DURATION_S, seed)
    a0 = stft(x)
    holes = rng.random(a0.shape) < frac
    A = _replace_values(a0, np.where(holes, 0, a0.values))
    E1 = stft(generate(SynthSystem.fir(RECOVERY_TAPS, RECOVERY_ORIGIN), x))
    junk = 1e6 * (rng.standard_normal(a0.shape) + 1j * rng.standard_normal(a0.shape))
    E2 = _replace_values(E1, np.where(holes, junk, E1.values))

    def outputs(E):
        tf, mask = transfer.transfer_function(A, E)
        other, _ = transfer.transfer_function(A, stft(x))
        return {
            "valid": tf.valid,
            "tf": tf.values,
            "log": transfer.log_magnitude_map(tf),
            "avg": transfer.avg_magnitude(tf).values,
            "phase": transfer.phase_delay(A, E, mask).values,
            "csd": crossspectral.csd(tf, other, 4).values,
            "coh": crossspectral.coherence_coefficient(tf, other).values,
        }

    o1, o2 = outputs(E1), outputs(E2)
    same = {k: bool(np.array_equal(o1[k], o2[k], equal_nan=True)) for k in o1}
    hidden = bool(not o1["valid"][holes].any() and np.all(o1["tf"][holes] == 0) and np.isnan(o1["log"][holes]).all())
    ok = all(same.values()) and hidden
    leaked = sorted(k for k, v in same.items() if not v)
    return OracleResult("mask-honesty", ok, {"holes": int(holes.sum()), "leaked": ",".join(leaked) or "none",
                                             "masked_invalid": hidden})


def check_phase_consistency(seed: int = 11, trials: int = 20, sigma: float = 0.5) -> OracleResult:
    """Constant inter-channel phase difference maximizes zero-lag |CSD| for fixed magnitudes."""
    rng = np.random.default_rng(seed)
    m, k = 240, 101
    wins = 0
    for _ in range(trials):
        mag_x, mag_y = rng.rayleigh(size=(2, m, k))
        base = rng.uniform(0, 2 * np.pi, (m, k))
        delta = rng.uniform(0, 2 * np.pi, k)
        hx = mag_x * np.exp(1j * base)
        r_const = np.abs((hx * np.conj(mag_y * np.exp(1j * (base - delta)))).mean(axis=0))
        jitter = rng.normal(0, sigma, (m, k))
        r_rand = np.abs((hx * np.conj(mag_y * np.exp(1j * (base - delta + jitter)))).mean(axis=0))
        wins += bool(np.all(r_const > r_rand))
    return OracleResult("phase-consistency", wins == trials, {"trials_won": wins, "trials": trials})


CHECKS: tuple[Callable[[], OracleResult], ...] = (
    check_identity,
    check_gain,
    check_delay,
    check_fir_recovery,
    check_causal_fir_circular,
    check_profile,
    check_coherence,
    check_noise_coherence,
    check_time_varying,
    check_mask_honesty,
    check_phase_consistency,
)


def run_selftest(out_dir: Path | None = None, stream: TextIO | None = None) -> list[OracleResult]:
    """Run every oracle, print one line each, and optionally write ``selftest.json``."""
    results = []
    for check in CHECKS:
        try:
            res = check()
        except Exception as exc:  # a crashing oracle is a failed oracle
            name = check.__name__.removeprefix("check_").replace("_", "-")
            res = OracleResult(name, False, {"error": f"{type(exc).__name__}: {exc}"})
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    if out_dir is not None:
        from .report import write_json

        write_json(Path(out_dir) / "selftest.json", {
            "passed": all(r.ok for r in results),
            "checks": [{"name": r.name, "ok": r.ok, "metrics": r.metrics} for r in results],
        })
    return results


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(0 if all(r.ok for r in run_selftest(stream=sys.stdout)) else 1)
