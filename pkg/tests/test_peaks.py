import numpy as np
import pytest
import scipy.signal
from hypothesis import given, settings
from hypothesis import strategies as st

from efrtf.peaks import (
    Peak,
    aggregate_histogram,
    detect_peaks,
    histogram_bin,
    local_maxima,
)
from efrtf.types import FrequencySeries, SeriesKind

F = np.arange(101.0)


def curve(values, valid=None):
    return FrequencySeries(values, F[: len(values)], SeriesKind.avg_magnitude, valid)


def bump(f0, h, var=2.0):
    return h * np.exp(-((F - f0) ** 2) / var)


def random_curve(seed):
    rng = np.random.default_rng(seed)
    x = 0.05 * rng.random(101)
    for _ in range(rng.integers(1, 8)):
        x += bump(rng.uniform(1, 99), rng.uniform(0.1, 5), rng.uniform(0.5, 20))
    return x


def test_two_dominant_bumps():
    peaks = detect_peaks(curve(bump(11, 4) + bump(82, 2.5) + bump(50, 1.5)))
    assert [p.freq_hz for p in peaks] == [11.0, 82.0]
    assert peaks[0].magnitude == pytest.approx(4, rel=1e-9)
    assert peaks[1].magnitude == pytest.approx(2.5, rel=1e-9)


def test_monotone_curve_has_no_interior_peak():
    assert detect_peaks(curve(F.copy())) == []


def test_equal_maxima_lower_frequency_wins():
    peaks = detect_peaks(curve(bump(40, 3, 0.5) + bump(45, 3, 0.5)))
    assert [p.freq_hz for p in peaks] == [40.0]


def test_dc_excluded_and_ignored_for_threshold():
    x = bump(30, 1.0)
    x[0] = 100.0
    peaks = detect_peaks(curve(x))
    assert [p.freq_hz for p in peaks] == [30.0]


def test_plateau_midpoint():
    x = np.zeros(101)
    x[20:25] = 1.0
    assert local_maxima(x, np.ones(101, bool)) == [22]
    x[20:24] = 2.0
    assert local_maxima(x, np.ones(101, bool)) == [21]


def test_invalid_bins_break_maxima():
    x = bump(30, 1.0)
    valid = np.ones(101, bool)
    valid[31] = False
    assert local_maxima(x, valid) == []


def test_too_few_valid_bins():
    valid = np.zeros(101, bool)
    valid[[1, 2]] = True
    with pytest.raises(ValueError, match="3 valid"):
        detect_peaks(curve(np.ones(101), valid))


def test_width_of_gaussian():
    # half-prominence width of a Gaussian with variance s^2 is 2 sqrt(2 ln 2) s
    x = bump(50, 1.0, var=2 * 4.0**2)
    (pk,) = detect_peaks(curve(x))
    assert pk.width_hz == pytest.approx(2 * np.sqrt(2 * np.log(2)) * 4.0, rel=0.01)
    assert pk.prominence == pytest.approx(1.0, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_scipy_oracle(seed):
    x = random_curve(seed)
    peaks = detect_peaks(curve(x))
    inner = x[1:]  # detector drops DC
    ref, _ = scipy.signal.find_peaks(inner, height=0.5 * inner.max(), distance=10)
    assert [p.freq_hz for p in peaks] == [float(i + 1) for i in ref]
    if len(ref):
        prom = scipy.signal.peak_prominences(inner, ref)[0]
        widths = scipy.signal.peak_widths(inner, ref, rel_height=0.5)[0]
        np.testing.assert_allclose([p.prominence for p in peaks], prom, rtol=1e-12)
        np.testing.assert_allclose([p.width_hz for p in peaks], widths, rtol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_scale_invariance(seed, alpha):
    x = random_curve(seed)
    a, b = detect_peaks(curve(x)), detect_peaks(curve(alpha * x))
    assert [p.freq_hz for p in a] == [p.freq_hz for p in b]
    np.testing.assert_allclose([alpha * p.magnitude for p in a], [p.magnitude for p in b], rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.9), st.floats(1, 30))
def test_contract_rules(seed, frac, sep):
    x = random_curve(seed)
    peaks = detect_peaks(curve(x), frac, sep)
    for p in peaks:
        assert p.magnitude >= frac * x[1:].max()
    f = [p.freq_hz for p in peaks]
    assert all(b - a >= sep for a, b in zip(f, f[1:]))


def test_histogram_single_peak():
    h = aggregate_histogram({"s01": {"Cz": [Peak(10.4, 1, 1, 1)]}})
    assert h.counts["Cz"][10] == 1 and h.counts["Cz"].sum() == 1
    assert h.bin_edges_hz[10] == 10 and h.bin_edges_hz[11] == 11
    assert len(h.bin_edges_hz) == 101


def test_histogram_thirteen_participants():
    rng = np.random.default_rng(0)
    peaks = {f"s{i:02d}": {"Cz": [Peak(rng.uniform(9, 11), 1, 1, 1)]} for i in range(13)}
    h = aggregate_histogram(peaks)
    assert h.counts["Cz"][9] + h.counts["Cz"][10] == 13
    assert h.band_count("Cz", 9, 11) == 13
    assert h.n_participants == 13


def test_histogram_edges_and_errors():
    assert histogram_bin(100.0, 1.0) == 99
    assert histogram_bin(0.0, 1.0) == 0
    with pytest.raises(ValueError):
        histogram_bin(100.5, 1.0)
    with pytest.raises(ValueError):
        aggregate_histogram({"s01": {"Cz": [Peak(-1, 1, 1, 1)]}})
    with pytest.raises(KeyError):
        aggregate_histogram({"s01": {"Oz": []}}, labels=["Cz"])


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from(["s01", "s02", "s03"]),
                       st.dictionaries(st.sampled_from(["Cz", "P4", "F8", "T7"]),
                                       st.lists(st.floats(0, 100), max_size=6)), max_size=3),
       st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_histogram_conserves_counts(raw, bw):
    peaks = {pid: {c: [Peak(f, 1, 1, 1) for f in fs] for c, fs in chans.items()} for pid, chans in raw.items()}
    h = aggregate_histogram(peaks, bw, ["Cz", "P4", "F8", "T7"])
    for c in h.counts:
        assert h.counts[c].sum() == sum(len(chans.get(c, [])) for chans in raw.values())
    assert h.bin_edges_hz[-1] == 100
