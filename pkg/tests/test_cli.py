from __future__ import annotations

import json

import pytest

from curveflow import io
from curveflow.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from curveflow.experiments import ConfigError, ScenarioConfig, verdict

SMALL = {
    "initial": {"preset": "flower", "params": {"amp": 0.3, "modes": 3}, "n": 48},
    "flow": {"area_floor_fraction": 1e-3},
    "analysis": {"entropy": False},
}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_run_analyze_plot(tmp_path, monkeypatch):
    monkeypatch.setenv("CURVEFLOW_OUTPUT", str(tmp_path / "out"))
    cfg = write(tmp_path / "c.json", {**SMALL, "name": "flw"})
    assert main(["run", str(cfg)]) == EXIT_OK
    run_dir = tmp_path / "out" / "flw"
    for name in ("config.json", "series.jsonl", "summary.json", "rescaled.jsonl", "snapshots/index.json"):
        assert (run_dir / name).is_file()
    summary = io.read_json(run_dir / "summary.json")
    assert summary["termination"] == "area_floor"
    assert summary["T_est"] <= summary["T_max"]
    assert summary["verdict"] in ("inconclusive", "threshold_violated")
    assert summary["threshold"]["holds"] is False
    assert main(["analyze", str(run_dir)]) == EXIT_OK
    again = io.read_json(run_dir / "analysis.json")
    assert again["T_est"] == summary["T_est"] and again["verdict"] == summary["verdict"]
    assert main(["plot", str(run_dir), "-n", "3"]) == EXIT_OK
    assert len(list((run_dir / "frames").glob("*.svg"))) >= 3


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_USAGE
    bad = write(tmp_path / "bad.json", {"initial": {"preset": "circle"}, "colour": 1})
    assert main(["run", str(bad)]) == EXIT_USAGE
    assert main(["analyze", str(tmp_path)]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_numerical_failure_exit_2(tmp_path):
    # an open profile cannot be reconstructed: numerical, not usage
    prof = tmp_path / "open.csv"
    import numpy as np

    th = 2 * np.pi * np.arange(32) / 32
    prof.write_text("theta,k\n" + "\n".join(f"{float(a)!r},{float(1 / (1 + 0.5 * np.cos(a)))!r}" for a in th) + "\n")
    cfg = write(tmp_path / "c.json", {"initial": {"file": str(prof)}, "output_dir": str(tmp_path / "o")})
    assert main(["run", str(cfg)]) == EXIT_NUMERICAL


def test_sweep_is_deterministic(tmp_path):
    sweep_cfg = {"base": SMALL, "grid": {"initial.params.amp": [0.05, 0.3]}}
    cfg = write(tmp_path / "s.json", sweep_cfg)
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "a")]) == EXIT_OK
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "b"), "-j", "2"]) == EXIT_OK
    for run in ("run_000", "run_001"):
        assert (tmp_path / "a" / run / "series.jsonl").read_bytes() == (tmp_path / "b" / run / "series.jsonl").read_bytes()
    index = io.read_json(tmp_path / "a" / "index.json")
    convex = [e["initially_convex"] for e in index["runs"]]
    assert convex == [True, False]


def test_sweep_records_failures(tmp_path):
    sweep_cfg = {"base": SMALL, "grid": {"initial.params.amp": [0.3, 2.0]}}
    cfg = write(tmp_path / "s.json", sweep_cfg)
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "a")]) == EXIT_NUMERICAL
    runs = io.read_json(tmp_path / "a" / "index.json")["runs"]
    assert runs[0]["error"] is None and runs[1]["error"]


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"initial": {}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"flow": {"sigma1": -1}})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"alpha": 2.0})
    cfg = ScenarioConfig.from_dict({})
    assert cfg.flow.area_floor_fraction == 1e-5
    assert ScenarioConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_verdict_rules():
    good = {"area_rel_gap": 0.001, "k_ratio": 1.01, "limit_residual": 0.01}
    assert verdict(True, True, 0.0, good)[0] == "round_point"
    assert verdict(True, False, 0.0, good)[0] == "round_point"
    assert verdict(False, False, 0.1, good)[0] == "inconclusive"
    assert verdict(False, False, None, None)[0] == "threshold_violated"
    assert verdict(False, True, 0.1, good)[0] == "round_point"
    assert verdict(True, True, 0.0, {**good, "k_ratio": 1.2})[0] == "inconclusive"
    assert verdict(True, True, 0.0, None)[0] == "inconclusive"
