"""Command-line interface: schema validation, exit codes, determinism.

Runs the installed module in a subprocess so exit codes and file output
are observed exactly as a caller would see them.
"""

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "hyperhall.cli"]


def run_cli(args, cwd):
    return subprocess.run(
        CLI + args, cwd=cwd, capture_output=True, text=True, timeout=600
    )


def test_no_command_is_usage_error(tmp_path):
    proc = run_cli([], cwd=tmp_path)
    assert proc.returncode == 2


def test_pairing_runs_and_writes(tmp_path):
    proc = run_cli(["pairing", "--out", "res"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((tmp_path / "res" / "pairing.json").read_text())
    assert payload["checks"]
    assert all(c["passed"] for c in payload["checks"])
    assert (tmp_path / "res" / "pairing_pairing.csv").exists()


def test_identical_config_gives_identical_bytes(tmp_path):
    # same config including the out name, two working directories: every
    # produced byte must match
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta_grid": [0.0, 0.125, 0.25], "radius": 2}))
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        proc = run_cli(
            ["butterfly", "--config", str(cfg), "--out", "res"],
            cwd=tmp_path / d,
        )
        assert proc.returncode == 0, proc.stderr
    for name in ("butterfly.json", "butterfly_levels.csv"):
        assert (tmp_path / "a" / "res" / name).read_bytes() == (
            tmp_path / "b" / "res" / name
        ).read_bytes()


def test_wall_clock_only_on_stderr(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta_grid": [0.1], "radius": 2}))
    proc = run_cli(["butterfly", "--config", str(cfg), "--out", "t"], cwd=tmp_path)
    assert proc.returncode == 0
    payload = (tmp_path / "t" / "butterfly.json").read_text()
    assert "seconds" not in payload  # timings stay out of comparable output


def test_unknown_config_key_is_schema_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_knob": 3}))
    proc = run_cli(["pairing", "--config", str(cfg)], cwd=tmp_path)
    assert proc.returncode == 2
    assert "bogus_knob" in proc.stderr


def test_empty_theta_grid_is_schema_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta_grid": []}))
    proc = run_cli(["butterfly", "--config", str(cfg)], cwd=tmp_path)
    assert proc.returncode == 2


def test_malformed_config_is_schema_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    proc = run_cli(["pairing", "--config", str(cfg)], cwd=tmp_path)
    assert proc.returncode == 2


def test_radius_out_of_range_is_schema_error(tmp_path):
    proc = run_cli(["spectrum", "--radius", "9"], cwd=tmp_path)
    assert proc.returncode == 2


def test_fermi_outside_spectrum_is_gap_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radii": [2], "fermi": 10.0, "theta": 0.125}))
    proc = run_cli(["conductance", "--config", str(cfg)], cwd=tmp_path)
    assert proc.returncode == 4
    assert "outside the spectral range" in proc.stderr


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": 0.3}))
    proc = run_cli(
        ["spectrum", "--config", str(cfg), "--theta", "0.8", "--radius", "2",
         "--out", "o"],
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((tmp_path / "o" / "spectrum.json").read_text())
    assert payload["config"]["theta"] == 0.8
