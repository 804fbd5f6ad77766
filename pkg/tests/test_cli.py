from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from deforge.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VERIFY, main
from deforge.config import shipped_config
from deforge.dataio import INDEX, read_blob, write_blob


def _lorenz_config(tmp_path) -> Path:
    p = tmp_path / "lorenz.json"
    p.write_text(json.dumps(shipped_config("lorenz")))
    return p


def _tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_generate_and_verify(tmp_path, capsys):
    cfg = _lorenz_config(tmp_path)
    out = tmp_path / "d"
    summary = tmp_path / "s.json"
    assert main(["generate", "--config", str(cfg), "--count", "10", "--seed", "42", "--out", str(out),
                 "--summary", str(summary)]) == EXIT_OK
    assert len(list(out.glob("sample_*"))) == 10 and (out / INDEX).is_file()
    s = json.loads(summary.read_text())
    assert s["count"] == 10 and s["max_same_op_max_rel"] < 1e-10
    capsys.readouterr()
    report = tmp_path / "r.json"
    assert main(["verify", "--dataset", str(out), "--report", str(report)]) == EXIT_OK
    assert json.loads(report.read_text())["n_ok"] == 10


def test_seed_and_workers_do_not_change_bytes(tmp_path):
    cfg = _lorenz_config(tmp_path)
    trees = []
    for w in (1, 3):
        out = tmp_path / f"w{w}"
        assert main(["generate", "--config", str(cfg), "--count", "6", "--seed", "5", "--out", str(out),
                     "--workers", str(w)]) == EXIT_OK
        trees.append(_tree(out))
    assert trees[0] == trees[1]
    other = tmp_path / "other"
    main(["generate", "--config", str(cfg), "--count", "6", "--seed", "6", "--out", str(other)])
    assert _tree(other) != trees[0]


def test_tampered_blob_fails_verify(tmp_path, capsys):
    cfg = _lorenz_config(tmp_path)
    out = tmp_path / "d"
    main(["generate", "--config", str(cfg), "--count", "4", "--out", str(out)])
    p = out / "sample_000003" / "f.bin"
    b = bytearray(p.read_bytes())
    b[40] ^= 0x10
    p.write_bytes(bytes(b))
    capsys.readouterr()
    assert main(["verify", "--dataset", str(out)]) == EXIT_VERIFY
    assert "sample_000003" in capsys.readouterr().err


def test_empty_dataset(tmp_path):
    out = tmp_path / "d"
    assert main(["generate", "--config", str(_lorenz_config(tmp_path)), "--count", "0", "--out", str(out)]) == EXIT_OK
    assert [p.name for p in out.iterdir()] == [INDEX]
    assert main(["verify", "--dataset", str(out)]) == EXIT_OK


def test_config_errors_write_nothing(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**shipped_config("lorenz"), "unknown": 1}))
    out = tmp_path / "d"
    assert main(["generate", "--config", str(bad), "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()
    assert main(["generate", "--config", str(tmp_path / "nope.json"), "--out", str(out)]) == EXIT_USAGE
    assert main(["verify", "--dataset", str(tmp_path / "missing")]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE


def test_generation_failure_names_sample(tmp_path, capsys):
    d = shipped_config("lorenz")
    d["synth"] = {**d["synth"], "offset": 0.0}  # trajectories cross x = 0
    p = tmp_path / "c.json"
    p.write_text(json.dumps(d))
    assert main(["generate", "--config", str(p), "--count", "2", "--out", str(tmp_path / "d")]) == EXIT_RUNTIME
    assert "sample 0" in capsys.readouterr().err


def test_dilate_round_trip(tmp_path, capsys):
    x = np.arange(64) * 2 * np.pi / 64
    src, mid, back = tmp_path / "a.bin", tmp_path / "b.bin", tmp_path / "c.bin"
    src.write_bytes(write_blob(np.cos(8 * x)[None]))
    assert main(["dilate", "--input", str(src), "--output", str(mid), "--factor", "4"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["retained_energy_fraction"] == 1.0
    assert np.abs(read_blob(mid.read_bytes())[0] - np.cos(2 * x)).max() < 1e-12
    assert main(["dilate", "--input", str(mid), "--output", str(back), "--factor", "4", "--inverse"]) == EXIT_OK
    assert np.abs(read_blob(back.read_bytes()) - read_blob(src.read_bytes())).max() < 1e-12
    # undilating wide-band content is a module error
    assert main(["dilate", "--input", str(src), "--output", str(back), "--factor", "4", "--inverse"]) == EXIT_RUNTIME


def test_spectrum_single_mode(tmp_path):
    x = np.arange(32) * 2 * np.pi / 32
    src = tmp_path / "u.bin"
    src.write_bytes(write_blob((np.cos(5 * x)[:, None] * np.ones(32))[None]))
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--input", str(src), "--out", str(out), "--slope", "-2"]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    E = np.array([float(r["E"]) for r in rows])
    k = np.array([float(r["k"]) for r in rows])
    assert k[np.argmax(E)] == 5.0 and E.max() == pytest.approx(0.5, rel=1e-12)
    assert np.sum(E > 1e-20) == 1
    assert out.with_suffix(".png").stat().st_size > 0


def test_condnum_small(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_x": 16, "n_t": 5, "seeds": 10, "steps": 2, "h": 3}))
    out = tmp_path / "cn"
    assert main(["condnum", "--config", str(cfg), "--out", str(out), "--quiet"]) == EXIT_OK
    rep = json.loads((out / "condnum_report.json").read_text())
    assert len(rep["rows"]) == 10
    assert abs(rep["summary"]["S_ratio_min"] - 4) < 4e-10 and abs(rep["summary"]["S_ratio_max"] - 4) < 4e-10
    assert (out / "condnum.png").stat().st_size > 0
    with (out / "condnum_rows.csv").open() as fh:
        assert len(list(csv.reader(fh))) == 11
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seeds": 3}))
    assert main(["condnum", "--config", str(bad), "--out", str(out)]) == EXIT_USAGE


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "deforge", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("deforge ")
