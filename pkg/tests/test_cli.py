import json
import subprocess
import sys

import numpy as np
import pytest

from twr_chtm.cli import main
from twr_chtm.config import load
from twr_chtm.matrixio import read_matrix

SINGLE = "seed = 3\n[gait]\n[radar]\n[wall]\n"
TOY = SINGLE + "[dataset]\nper_class = 2\n[eval]\norders = [0, 4, 32]\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_simulate_single_sample(tmp_path):
    cfg = write(tmp_path, "run.toml", SINGLE)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    (entry,) = manifest["samples"]
    assert sorted(entry["files"]) == ["chtm_macro", "chtm_micro", "dtm", "envelopes", "rtm"]
    expected_hash = load(cfg).hash
    assert manifest["config_hash"] == expected_hash and "noise_reference" in manifest
    for name, rel in entry["files"].items():
        assert (tmp_path / "a" / rel).exists()
        if rel.endswith(".chtm"):
            assert read_matrix(tmp_path / "a" / rel).sidecar["config_hash"] == expected_hash
    micro = read_matrix(tmp_path / "a" / entry["files"]["chtm_micro"])
    assert micro.shape == (33, 100) and micro.sidecar["region"] == "micro"

    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert json.loads((tmp_path / "c" / "manifest.json").read_text())["config_hash"] != expected_hash


def test_simulate_saves_cubes_on_request(tmp_path):
    cfg = write(tmp_path, "run.toml", "save_cubes = true\n" + SINGLE.replace("[radar]\n", "[radar]\npulses = 80\n"))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    entry = json.loads((tmp_path / "o" / "manifest.json").read_text())["samples"][0]
    re = read_matrix(tmp_path / "o" / entry["files"]["cube_real"])
    assert re.shape == (3190, 80) and re.sidecar["wall"]["permittivity"] == 6.0


def test_validation_and_io_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "bad.toml", "[gait]\n[radar]\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert "wall" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "none.toml")]) == 2
    blocker = write(tmp_path, "file", "")
    cfg = write(tmp_path, "ok.toml", SINGLE)
    assert main(["simulate", "--config", str(cfg), "--out", str(blocker / "sub")]) == 2
    assert main(["inspect", str(write(tmp_path, "junk.chtm", "nope"))]) == 2
    assert main(["nonsense"]) == 1


def test_log_level_env(tmp_path, monkeypatch):
    cfg = write(tmp_path, "ok.toml", SINGLE)
    monkeypatch.setenv("CHTM_LOG", "loud")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    monkeypatch.setenv("CHTM_LOG", "debug")
    assert main(["inspect", str(tmp_path / "missing.chtm")]) == 2


def test_render_and_inspect(tmp_path, capsys):
    cfg = write(tmp_path, "run.toml", SINGLE)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    dtm = next((tmp_path / "o").rglob("dtm.chtm"))
    capsys.readouterr()
    assert main(["inspect", str(dtm)]) == 0
    out = capsys.readouterr().out
    assert "magic: CHTM1" in out and "rows: 128" in out and "cols: 100" in out
    assert main(["render", str(dtm), "--out", str(tmp_path / "d.pgm")]) == 0
    assert (tmp_path / "d.pgm").read_bytes().startswith(b"P5\n100 128\n255\n")
    assert main(["render", str(dtm), "--out", str(tmp_path / "d.ppm"), "--colormap", "viridis"]) == 0
    corrupt = tmp_path / "c.chtm"
    corrupt.write_bytes(b"CHTM2" + dtm.read_bytes()[5:])
    assert main(["render", str(corrupt), "--out", str(tmp_path / "c.pgm")]) == 2


@pytest.fixture(scope="module")
def toy_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    cfg = write(root, "toy.toml", TOY)
    assert main(["simulate", "--config", str(cfg), "--out", str(root / "ds")]) == 0
    return cfg, root / "ds"


def test_eval_reports(toy_dataset, tmp_path):
    cfg, ds = toy_dataset
    assert main(["eval", "--config", str(cfg), str(ds), "--out", str(tmp_path / "r1")]) == 0
    acc = (tmp_path / "r1" / "accuracy.csv").read_text().splitlines()
    assert acc[0] == "class,DTM,ChTM" and len(acc) == 10 and acc[-1].startswith("overall,")
    sep = (tmp_path / "r1" / "separability.csv").read_text().splitlines()
    assert sep[0].startswith("representation,d_inter,d_intra") and len(sep) == 3
    assert main(["eval", "--config", str(cfg), str(ds), "--out", str(tmp_path / "r2")]) == 0
    assert tree(tmp_path / "r1") == tree(tmp_path / "r2")


def test_sweeps(toy_dataset, tmp_path):
    cfg, ds = toy_dataset
    assert main(["sweep-order", "--config", str(cfg), str(ds), "--out", str(tmp_path)]) == 0
    order = (tmp_path / "sweep_order.csv").read_text().splitlines()
    assert [l.split(",")[0] for l in order[1:]] == ["0", "4", "32"]
    assert main(["sweep-snr", "--config", str(cfg), str(ds), "--out", str(tmp_path)]) == 0
    snr = (tmp_path / "sweep_snr.csv").read_text().splitlines()
    assert len(snr) == 7
    values = np.array([[float(v) for v in l.split(",")[-1:]] for l in snr[1:]])
    assert np.all((values >= 0) & (values <= 1))


def test_eval_rejects_mismatched_dataset(toy_dataset, tmp_path):
    cfg, ds = toy_dataset
    other = write(tmp_path, "other.toml", TOY.replace("[wall]\n", "[wall]\nthickness = 0.3\n"))
    assert main(["eval", "--config", str(other), str(ds)]) == 1
    broken = tmp_path / "broken"
    broken.mkdir()
    manifest = json.loads((ds / "manifest.json").read_text())
    for e in manifest["samples"]:
        e["files"] = {k: str((ds / v).resolve()) for k, v in e["files"].items()}
    # one sample whose ChTM is actually an RTM: feature lengths disagree
    manifest["samples"][0]["files"]["chtm_micro"] = manifest["samples"][0]["files"]["rtm"]
    (broken / "manifest.json").write_text(json.dumps(manifest))
    assert main(["eval", "--config", str(cfg), str(broken)]) == 1
    manifest["samples"][1]["files"]["dtm"] = str(tmp_path / "missing.chtm")
    (broken / "manifest.json").write_text(json.dumps(manifest))
    assert main(["eval", "--config", str(cfg), str(broken)]) == 2
    assert main(["eval", "--config", str(cfg), str(tmp_path / "nowhere")]) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "twr_chtm.cli", "inspect", str(tmp_path / "x")],
                         capture_output=True, text=True)
    assert out.returncode == 2 and "error" in out.stderr
