import json
import subprocess
import sys

import numpy as np
import pytest

from radiomix import __version__
from radiomix.cli import main
from radiomix.features import read_melf, write_melf
from radiomix.labels import events_to_frames, frames_to_events, read_annotations, write_annotations
from signals import music_like, write_wav


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize("sub", [[], ["synth"], ["evaluate"], ["postprocess"]])
def test_help(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main(sub + ["--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "radiomix", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--bogus"])
    assert exc.value.code == 2


def test_missing_dir_exits_2(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert main(["evaluate", "--ref", str(missing), "--pred", str(tmp_path)]) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("radiomix: error:") and str(missing) in err and "\n" not in err


def test_missing_required_option(capsys):
    assert main(["featurize", "--out", "x"]) == 2
    assert "--in" in capsys.readouterr().err


def test_loudness_prints_two_decimals(tmp_path, capsys):
    path = write_wav(tmp_path / "m.wav", music_like(4.0, np.random.default_rng(0)), fmt="float32")
    assert main(["loudness", str(path)]) == 0
    out = capsys.readouterr().out.strip()
    assert len(out.split(".")[1]) == 2 and float(out) < 0


def test_loudness_silence_exits_1(tmp_path, capsys):
    path = write_wav(tmp_path / "z.wav", np.zeros(22050 * 2))
    assert main(["loudness", str(path)]) == 1
    assert "UnmeasurableError" in capsys.readouterr().err


def test_index_writes_json(corpus_root, tmp_path, capsys):
    out = tmp_path / "idx.json"
    assert main(["index", "--corpus", str(corpus_root), "--out", str(out)]) == 0
    assert "music=4 speech=3 noise=2" in capsys.readouterr().out
    assert json.loads(out.read_text())["files"]["noise"]


def test_config_file_and_override(corpus_root, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[synth]\nvariant = "d-OF"\ncount = 3\nseed = 9\nld-min = 8.0\n')
    out = tmp_path / "out"
    argv = ["--config", str(cfg), "synth", "--corpus", str(corpus_root), "--out", str(out), "--seed", "10"]
    assert main(argv + ["--workers", "1"]) == 0
    run = json.loads((out / "run.json").read_text())
    assert run["config"]["variant"] == "d-OF" and run["config"]["seed"] == 10
    assert run["config"]["ld_min"] == 8.0 and run["count"] == 3
    assert len(list(out.glob("*.wav"))) == 3


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[synth]\ncolour = 1\n")
    assert main(["--config", str(cfg), "synth"]) == 2
    assert "colour" in capsys.readouterr().err


def test_synth_twice_identical(corpus_root, tmp_path):
    for name in ("a", "b"):
        argv = ["synth", "--corpus", str(corpus_root), "--out", str(tmp_path / name), "--count", "10", "--seed", "1"]
        assert main(argv + ["--workers", "1" if name == "a" else "2"]) == 0
    for p in sorted((tmp_path / "a").iterdir()):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


def test_postprocess_cli(tmp_path, capsys):
    probs = np.zeros((1400, 2))
    probs[:, 0] = 0.8
    probs[200:260, 0] = 0.1  # 0.6 s dip is bridged
    probs[500:700, 1] = 0.9
    d = tmp_path / "probs"
    d.mkdir()
    write_melf(d / "w00.melf", probs[:800])
    write_melf(d / "w01.melf", probs[600:1400])
    out = tmp_path / "pred.tsv"
    assert main(["postprocess", "--probs", str(d), "--out", str(out), "--n-frames", "1400"]) == 0
    assert list(read_annotations(out)) == [(0.0, 14.0, "music"), (5.0, 7.0, "speech")]


def test_end_to_end_pipeline(corpus_root, tmp_path, capsys):
    data, feats = tmp_path / "data", tmp_path / "feats"
    assert main(["synth", "--corpus", str(corpus_root), "--out", str(data), "--count", "50",
                 "--seed", "2", "--workers", "1"]) == 0
    assert main(["featurize", "--in", str(data), "--out", str(feats)]) == 0
    mels = sorted(feats.glob("*.melf"))
    assert len(mels) == 50 and read_melf(mels[0]).shape == (802, 80)

    exact, framed = tmp_path / "exact", tmp_path / "framed"
    exact.mkdir()
    framed.mkdir()
    for tsv in data.glob("*.tsv"):
        ev = read_annotations(tsv)
        write_annotations(exact / tsv.name, ev)
        write_annotations(framed / tsv.name, frames_to_events(events_to_frames(ev, 800)))
    report = tmp_path / "report.json"
    assert main(["evaluate", "--ref", str(data), "--pred", str(exact), "--json", str(report)]) == 0
    assert json.loads(report.read_text())["overall"]["overall"]["f_measure"] == 1.0
    assert main(["evaluate", "--ref", str(data), "--pred", str(framed), "--json", str(report)]) == 0
    # frame quantization moves boundaries by at most half a frame
    assert json.loads(report.read_text())["overall"]["overall"]["f_measure"] > 0.99
