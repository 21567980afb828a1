"""Command-line interface smoke tests over tiny configurations."""

import json

import numpy as np
import pytest

from sweetspot.cli import main


def test_oracle_command(tmp_path, capsys):
    rc = main([
        "oracle", "--benchmark", "toy1d", "--dim", "1",
        "--theta-rule", "eighth", "--resolution", "128",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    assert list(tmp_path.glob("*.npz"))
    out = capsys.readouterr().out
    assert "robust optimum" in out


def test_run_and_summarise_commands(tmp_path, capsys):
    oracle_dir = tmp_path / "cache"
    run_dir = tmp_path / "runs" / "centre"
    rc = main([
        "run", "--benchmark", "toy1d", "--dim", "1", "--strategy", "centre",
        "--iters", "1", "--reps", "2", "--seed", "3", "--j", "4", "--m", "4",
        "--oracle-dir", str(oracle_dir), "--out", str(run_dir),
        "--config", str(_write_config(tmp_path)),
    ])
    assert rc == 0
    assert (run_dir / "convergence.csv").exists()
    assert (run_dir / "metadata.json").exists()
    assert (run_dir / "summary.csv").exists()

    rc = main(["summarise", "--in", str(tmp_path / "runs"), "--out", str(tmp_path / "agg")])
    assert rc == 0
    assert (tmp_path / "agg" / "summary.csv").exists()


def _write_config(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "init_points": 5,
        "gp_restarts": 2,
        "acq_population": 6,
        "acq_generations": 3,
        "inner_population": 6,
        "inner_generations": 3,
        "oracle_resolution": 128,
    }))
    return cfg


def test_cli_flags_override_config(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "benchmark": "toy1d", "dim": 1, "strategy": "random",
        "iterations": 1, "repetitions": 1, "seed": 9,
        "init_points": 5, "gp_restarts": 2,
        "acq_population": 6, "acq_generations": 3,
        "inner_population": 6, "inner_generations": 3,
        "oracle_resolution": 128, "j_realisations": 4, "m_quality": 4, "m_acq": 4,
    }))
    out = tmp_path / "out"
    rc = main([
        "run", "--config", str(cfg), "--strategy", "centre",
        "--oracle-dir", str(tmp_path / "cache"), "--out", str(out),
    ])
    assert rc == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["strategy"] == "centre"  # flag beat the file


def test_baseline_ei_flag(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "ei"
    rc = main([
        "run", "--benchmark", "toy1d", "--dim", "1", "--strategy", "centre",
        "--baseline-ei", "--iters", "1", "--reps", "1", "--seed", "4",
        "--j", "4", "--m", "4", "--config", str(cfg),
        "--oracle-dir", str(tmp_path / "cache"), "--out", str(out),
    ])
    assert rc == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["strategy"] == "baseline-ei"


def test_run_missing_required_settings(tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--benchmark", "toy1d", "--out", str(tmp_path)])


def test_summarise_empty_dir(tmp_path):
    with pytest.raises(SystemExit):
        main(["summarise", "--in", str(tmp_path)])
