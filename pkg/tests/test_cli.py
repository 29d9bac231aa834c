import json
import math
import subprocess
import sys

import pytest

from ostrovsky.cli import main

SMALL = ["grid.period_L=62.83185307179586", "grid.modes_N=256", "evolution.horizon_T=0.05",
         "evolution.dt=1e-3", "evolution.record_every=10", "evolution.dt_check=[0.01,0.005,0.0025]"]


def manifest(root, cmd):
    return json.loads((root / cmd / "manifest.json").read_text())


def test_dry_run(capsys, tmp_path):
    assert main(["evolve", "--dry-run", "--out", str(tmp_path), "seed=3"]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 3
    assert not any(tmp_path.iterdir())


def test_bad_config_exit_code(capsys):
    assert main(["evolve", "--dry-run", "grid.bogus=1"]) == 2
    assert "config error" in capsys.readouterr().err


def test_zero_data_evolve(tmp_path):
    assert main(["evolve", "--out", str(tmp_path), "initial.kind=zero", *SMALL]) == 0
    m = manifest(tmp_path, "evolve")
    assert m["passed"] and m["error"] is None
    assert set(m["files"]) >= {"trajectory.csv", "final_state.json", "temporal_order.csv", "config.json"}
    rows = (tmp_path / "evolve" / "trajectory.csv").read_text().splitlines()
    assert rows[0] == f"# config_hash={m['config_hash']}"
    assert all(float(r.split(",")[1]) == 0 for r in rows[2:])


def test_smooth_evolve_records_drift(tmp_path):
    assert main(["evolve", "--out", str(tmp_path), *SMALL]) == 0
    m = manifest(tmp_path, "evolve")
    assert m["checks"]["l2_drift"]["value"] < 1e-6
    assert m["checks"]["temporal_order"]["pass"]
    cfg = json.loads((tmp_path / "evolve" / "config.json").read_text())
    assert cfg["grid"]["modes_N"] == 256


@pytest.mark.filterwarnings("ignore:top dyadic band")
def test_large_step_fails_gate(tmp_path, capsys):
    code = main(["evolve", "--out", str(tmp_path), *SMALL, "evolution.dt=0.025", "initial.amplitude=5"])
    assert code != 0
    m = manifest(tmp_path, "evolve")
    assert not m["passed"]
    assert "FAIL" in capsys.readouterr().out or m["error"]


def test_smoothing_gamma0_flag_and_single_seed(tmp_path):
    args = ["smoothing", "--out", str(tmp_path), "dispersion.gamma=0", "smoothing.n_seeds=1",
            "smoothing.modes_N=2048", "smoothing.period_L=100.53096491487338", "smoothing.horizon_T=0.02",
            "smoothing.dt=1e-4", "smoothing.record_every=100"]
    assert main(args) == 0
    rep = json.loads((tmp_path / "smoothing" / "smoothing_report.json").read_text())
    assert rep["diagnostic"] == "diagnostic: periodic-domain confound"
    assert rep["ensemble_stats"]["degenerate"]
    assert (tmp_path / "smoothing" / "band_energies.csv").exists()


def test_lemma_check(tmp_path):
    assert main(["lemma-check", "--out", str(tmp_path)]) == 0
    m = manifest(tmp_path, "lemma-check")
    assert len(m["checks"]) == 3 and m["passed"]


def test_env_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("OSTROVSKY_OUT", str(tmp_path / "env"))
    assert main(["lemma-check", "lemma.separations=[0,1]"]) == 0
    assert (tmp_path / "env" / "lemma-check" / "manifest.json").exists()


def test_threads_and_seed_flags(tmp_path, capsys):
    assert main(["picard", "--dry-run", "--threads", "2", "--seed", "9"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["threads"] == 2 and d["seed"] == 9


def test_console_script_module(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ostrovsky.cli", "kdv-limit", "--dry-run"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "kdv" in r.stdout
