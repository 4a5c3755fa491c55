import json
import math
import os

import numpy as np
import pytest

from specloc.cli import main
from specloc.io import read_csv


def run(*argv):
    return main([str(a) for a in argv])


def test_analyze_ring(tmp_path):
    assert run("analyze", "--generate", "ring", "--n", 4, "--out", tmp_path) == 0
    lam = [float(r["lambda"]) for r in read_csv(tmp_path / "spectrum.csv")]
    np.testing.assert_allclose(lam, [0, 1, 1, 2], atol=1e-12)
    meta = json.loads((tmp_path / "spectrum_meta.json").read_text())
    assert meta["bipartite"] and meta["connected"]
    assert (tmp_path / "manifest.json").exists()


def test_analyze_star_fluctuation(tmp_path):
    assert run("analyze", "--generate", "star", "--n", 4, "--out", tmp_path) == 0
    stats = json.loads((tmp_path / "degree_stats.json").read_text())
    assert stats["fluctuation"] == pytest.approx(0.4330127, abs=1e-7)


def test_analyze_missing_input(tmp_path, capsys):
    missing = tmp_path / "missing.txt"
    assert run("analyze", "--input", missing, "--out", tmp_path / "o") == 5
    assert str(missing) in capsys.readouterr().err


def test_analyze_bad_line(tmp_path, capsys):
    src = tmp_path / "g.txt"
    src.write_text("0 1\n1 1\n")
    assert run("analyze", "--input", src, "--out", tmp_path / "o") == 3
    assert "g.txt:2:" in capsys.readouterr().err


def test_analyze_edge_list_and_signal(tmp_path):
    src = tmp_path / "g.csv"
    src.write_text("# triangle\n0,1\n1,2\n2,0\n")
    assert run("analyze", "--input", src, "--signal", "onehot", "--out", tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "band_participation.csv")
    assert len(rows) == 3
    assert rows[0]["present"] == "true"


def test_usage_errors(tmp_path):
    assert run("analyze", "--out", tmp_path) == 2
    assert run("analyze", "--generate", "nope", "--out", tmp_path) == 2
    assert run("propagate", "--generate", "ring", "--n", 6, "--rewire", "--check-decay",
               "--out", tmp_path) == 2
    assert run("propagate", "--generate", "ring", "--n", 6, "--nonlinearity", "relu",
               "--check-decay", "--out", tmp_path) == 2


def test_validation_exit(tmp_path):
    assert run("analyze", "--generate", "ring", "--n", 2, "--out", tmp_path) == 3
    assert run("propagate", "--generate", "ring", "--n", 5, "--depth", -1, "--out", tmp_path) == 3


def test_propagate_depth_zero(tmp_path):
    assert run("propagate", "--generate", "ring", "--n", 4, "--depth", 0, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "metrics.csv")
    assert {r["layer"] for r in rows} == {"0"}
    assert len(rows) == 4


def test_propagate_check_decay(tmp_path):
    assert run("propagate", "--generate", "erdos_renyi", "--n", 30, "--p", 0.2,
               "--graph-seed", 1, "--depth", 10, "--check-decay", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "decay.json").read_text())["passed"] is True


def test_rewire_report(tmp_path):
    assert run("propagate", "--generate", "star", "--n", 9, "--depth", 3, "--rewire",
               "--alpha", 2, "--trials", 16, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "rewire_report.json").read_text())
    assert rep["trials"] == 16
    assert (tmp_path / "rewire_effective_fluctuation.csv").exists()


def test_compare_rewire_alias(tmp_path):
    assert run("compare-rewire", "--generate", "star", "--n", 9, "--depth", 2,
               "--trials", 4, "--out", tmp_path) == 0
    assert (tmp_path / "rewire_report.json").exists()


def test_json_format(tmp_path):
    assert run("analyze", "--generate", "ring", "--n", 5, "--format", "json",
               "--out", tmp_path) == 0
    recs = json.loads((tmp_path / "spectrum.json").read_text())
    assert len(recs) == 5 and recs[0]["lambda"] == pytest.approx(0.0, abs=1e-12)
    assert not (tmp_path / "spectrum.csv").exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generate": "ring", "n": 6}))
    assert run("analyze", "--config", cfg, "--out", tmp_path / "a") == 0
    assert len(read_csv(tmp_path / "a" / "spectrum.csv")) == 6
    assert run("analyze", "--config", cfg, "--n", 8, "--out", tmp_path / "b") == 0
    assert len(read_csv(tmp_path / "b" / "spectrum.csv")) == 8
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"generate": "ring", "bogus": 1}))
    assert run("analyze", "--config", bad, "--out", tmp_path / "c") == 2


def test_replay_bit_identical(tmp_path):
    assert run("propagate", "--generate", "barabasi_albert", "--n", 40, "--m", 2,
               "--seed", 7, "--depth", 5, "--out", tmp_path / "a") == 0
    assert run("replay", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b") == 0
    for name in ("metrics.csv",):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_changes_output(tmp_path):
    for s in (1, 2):
        run("propagate", "--generate", "erdos_renyi", "--n", 20, "--p", 0.3, "--seed", s,
            "--depth", 2, "--out", tmp_path / str(s))
    assert (tmp_path / "1" / "metrics.csv").read_bytes() != (tmp_path / "2" / "metrics.csv").read_bytes()


def test_lattice_anderson_extended(tmp_path):
    assert run("lattice", "--model", "anderson", "--n", 256, "--w", 0, "--seed", 1,
               "--out", tmp_path) == 0
    p = [float(r["participation"]) for r in read_csv(tmp_path / "spectrum.csv")]
    assert len(p) == 256 and min(p) > 0.5


def test_lattice_spring_band_edge(tmp_path):
    assert run("lattice", "--model", "spring1d", "--n", 512, "--eps", 0, "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert abs(summary["omega_max"] - 2.0) < 1e-6
    rows = read_csv(tmp_path / "dos.csv")
    assert len(rows) == 50


def test_lattice_spring2d(tmp_path):
    assert run("lattice", "--model", "spring2d", "--n", 6, "--eps", 0.5, "--seeds", 2,
               "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 36 and rows[0]["xi_or_inf"] == "nan"


def test_lattice_sweep(tmp_path):
    assert run("lattice", "--sweep", "w=1,2,4", "--seeds", 8, "--n", 400,
               "--out", tmp_path) == 0
    fit = json.loads((tmp_path / "sweep.json").read_text())
    assert fit["gamma"] > 0
    assert (tmp_path / "spectrum_w=2.csv").exists()


def test_lattice_sweep_extended_regime(tmp_path, capsys):
    assert run("lattice", "--model", "spring1d", "--n", 64, "--sweep", "eps=0,0.01,0.02",
               "--out", tmp_path) == 3
    assert "disorder 0" in capsys.readouterr().err


def test_lattice_bad_sweep(tmp_path):
    assert run("lattice", "--model", "anderson", "--sweep", "eps=1,2,3", "--out", tmp_path) == 3


def test_no_writes_outside_out(tmp_path, monkeypatch):
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "out"
    assert run("propagate", "--generate", "star", "--n", 6, "--rewire", "--trials", 2,
               "--depth", 2, "--out", out) == 0
    assert run("lattice", "--n", 32, "--out", out / "lat") == 0
    assert os.listdir(work) == []
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out", "work"]
    assert not any(p.name.startswith(".") for p in out.rglob("*"))


def test_threads_env_does_not_change_output(tmp_path, monkeypatch):
    args = ["propagate", "--generate", "star", "--n", 9, "--rewire", "--trials", 6, "--depth", 3]
    assert run(*args, "--out", tmp_path / "a") == 0
    monkeypatch.setenv("SPECLOC_THREADS", "3")
    assert run(*args, "--out", tmp_path / "b") == 0
    for name in ("metrics.csv", "rewire_effective_fluctuation.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_precision(tmp_path):
    run("analyze", "--generate", "ring", "--n", 7, "--out", tmp_path)
    for r in read_csv(tmp_path / "spectrum.csv"):
        lam = float(r["lambda"])
        assert float(f"{lam:.17g}") == lam and not math.isnan(lam)
