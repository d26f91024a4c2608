import csv
import json
import logging

import numpy as np
import pytest

from efrtf.cli import main
from efrtf.ingest import write_wav
from efrtf.types import SignalRecord


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def resonance_run(resonance_manifest, tmp_path_factory):
    out = tmp_path_factory.mktemp("agg")
    code = main(["aggregate", "--manifest", str(resonance_manifest), "--out", str(out), "--check-reproduction"])
    return code, out


def test_envelope_rate_and_silence(tmp_path):
    tone = np.sin(2 * np.pi * 440 * np.arange(16000) / 8000) * (1 + 0.5 * np.sin(2 * np.pi * 20 * np.arange(16000) / 8000))
    write_wav(tmp_path / "a.wav", SignalRecord(0.4 * tone, 8000.0))
    assert main(["envelope", str(tmp_path / "a.wav"), "--out", str(tmp_path / "a.csv")]) == 0
    rows = _read_csv(tmp_path / "a.csv")
    assert rows[0] == ["time_s", "envelope"] and len(rows) - 1 == 400

    write_wav(tmp_path / "z.wav", SignalRecord(np.zeros(8000), 8000.0))
    assert main(["envelope", str(tmp_path / "z.wav"), "--out", str(tmp_path / "z.csv")]) == 0
    assert all(float(r[1]) == 0.0 for r in _read_csv(tmp_path / "z.csv")[1:])


def test_envelope_plot(tmp_path):
    write_wav(tmp_path / "a.wav", SignalRecord(0.1 * np.ones(8000), 8000.0))
    assert main(["envelope", str(tmp_path / "a.wav"), "--out", str(tmp_path / "a.csv"), "--emit-plots"]) == 0
    assert (tmp_path / "a.svg").read_text().lstrip().startswith("<?xml")


def test_missing_audio_is_io_error(tmp_path, capsys):
    assert main(["envelope", str(tmp_path / "nope.wav"), "--out", str(tmp_path / "x.csv")]) == 2
    assert "file not found" in capsys.readouterr().err


def test_bad_flags_are_config_errors(tmp_path, identity_manifest):
    base = ["analyze", "--manifest", str(identity_manifest), "--participant", "s01", "--out", str(tmp_path)]
    with pytest.raises(SystemExit) as exc:
        main(base + ["--window-s", "-1"])
    assert exc.value.code == 3
    assert main(base + ["--hop-s", "2"]) == 3
    assert main(base + ["--mask-floor", "1.5"]) == 3
    assert main(["analyze", "--manifest", str(identity_manifest), "--participant", "s99", "--out", str(tmp_path)]) == 3
    assert not (tmp_path / "s99").exists()


def test_analyze_identity_recovers_unity(tmp_path, identity_manifest):
    assert main(["analyze", "--manifest", str(identity_manifest), "--participant", "s01", "--out", str(tmp_path)]) == 0
    d = tmp_path / "s01"
    for name in ("resolved_config.json", "envelope_params.json", "envelope.csv", "channel_peaks.csv", "csd_peaks.csv"):
        assert (d / name).is_file()
    for c in ("Cz", "P4", "F8", "T7"):
        rows = _read_csv(d / "channels" / f"{c}_avg_magnitude.csv")[1:]
        vals = np.array([float(r[1]) for r in rows if r[2] == "1"])
        assert len(vals) > 90
        np.testing.assert_allclose(vals, 1.0, atol=1e-9)
    assert len(list((d / "pairs").glob("*.csv"))) == 6
    cfg = json.loads((d / "resolved_config.json").read_text())
    assert cfg["participant_id"] == "s01" and "output_dir" not in cfg


def test_failed_analysis_leaves_no_partial_output(tmp_path, identity_manifest):
    manifest = json.loads(identity_manifest.read_text())
    manifest["s01"]["eeg_path"] = str(identity_manifest.parent / "missing.csv")
    manifest["s01"]["audio_path"] = str(identity_manifest.parent / manifest["s01"]["audio_path"])
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(manifest))
    out = tmp_path / "out"
    assert main(["analyze", "--manifest", str(broken), "--participant", "s01", "--out", str(out)]) == 2
    assert not (out / "s01").exists()
    assert not out.exists() or not any(out.iterdir())


def test_analyze_is_byte_identical(tmp_path, identity_manifest):
    args = ["analyze", "--manifest", str(identity_manifest), "--participant", "s04"]
    assert main(args + ["--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--jobs", "4"]) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_aggregate_resonance(resonance_run):
    code, out = resonance_run
    assert code == 0
    assert len([p for p in out.iterdir() if p.is_dir() and p.name.startswith("s")]) == 13
    ch = json.loads((out / "histograms" / "channel_peaks.json").read_text())
    csd = json.loads((out / "histograms" / "csd_peaks.json").read_text())
    assert sorted(ch["counts"]) == ["Cz", "F8", "P4", "T7"]
    assert len(csd["counts"]) == 6
    for hist in (ch, csd):
        for counts in hist["counts"].values():
            counts = np.asarray(counts)
            assert counts[10:13].sum() >= 13 and counts[10:13].sum() == counts.sum()
    cfg = json.loads((out / "resolved_config.json").read_text())
    assert len(cfg["participants"]) == 13
    rows = _read_csv(out / "channel_peaks.csv")[1:]
    freqs = [float(r[2]) for r in rows]
    assert freqs == sorted(freqs)
    rep = json.loads((out / "reproduction.json").read_text())
    assert rep["alpha_ok"] and rep["alpha_peak_hz"] == [11.0]


def test_aggregate_empty_manifest(tmp_path):
    (tmp_path / "m.json").write_text("{}")
    assert main(["aggregate", "--manifest", str(tmp_path / "m.json"), "--out", str(tmp_path / "o")]) == 3


def test_aggregate_single_participant_warns(tmp_path, identity_manifest, caplog):
    manifest = json.loads(identity_manifest.read_text())
    one = {"s04": manifest["s04"] | {k: str(identity_manifest.parent / manifest["s04"][k])
                                     for k in ("eeg_path", "audio_path")}}
    (tmp_path / "m.json").write_text(json.dumps(one))
    with caplog.at_level(logging.WARNING, logger="efrtf"):
        code = main(["aggregate", "--manifest", str(tmp_path / "m.json"), "--out", str(tmp_path / "o"), "--emit-plots"])
    assert code == 0
    assert any("only 1 participant" in r.message for r in caplog.records)
    for name in ("channel_peaks", "csd_peaks"):
        for ext in ("json", "csv", "svg"):
            assert (tmp_path / "o" / "histograms" / f"{name}.{ext}").is_file()
    assert list((tmp_path / "o" / "s04").glob("*.svg")) or list((tmp_path / "o" / "s04").rglob("*.svg"))


def test_synth_subcommand(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--participants", "2", "--duration-s", "11",
                 "--system", "resonance"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert sorted(manifest) == ["s01", "s02"]
    assert capsys.readouterr().out.strip().endswith("manifest.json")
    assert main(["synth", "--out", str(tmp_path), "--participants", "0"]) == 3


def test_selftest_subcommand(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path)]) == 0
    assert "FAIL" not in capsys.readouterr().out
    assert json.loads((tmp_path / "selftest.json").read_text())["passed"]
