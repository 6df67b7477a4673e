import subprocess
import sys

import pytest

from nvmrlsim.cli import main
from nvmrlsim.config import data_path


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "nvmrlsim.cli", *args],
                          capture_output=True, text=True, timeout=300)
    return proc


def test_no_arguments_is_usage_error():
    proc = run_cli([])
    assert proc.returncode == 2


def test_unknown_subcommand_is_usage_error():
    proc = run_cli(["frobnicate"])
    assert proc.returncode == 2


def test_unknown_flag_is_usage_error():
    proc = run_cli(["shapes", "--bogus"])
    assert proc.returncode == 2


def test_bad_config_path_is_exit_3():
    proc = run_cli(["shapes", "--config", "/nonexistent/run.cfg"])
    assert proc.returncode == 3
    assert proc.stderr.startswith("error: config:")


def test_broken_reference_is_exit_4(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text(data_path("fig12_reference.csv").read_text().replace("11.9285", "99.0"))
    proc = run_cli(["check-reference", "--reference", str(bad)])
    assert proc.returncode == 4
    assert proc.stderr.startswith("error:")
    assert proc.stderr.count("\n") == 1  # single-line diagnostic


def test_check_reference_validates_shipped_table():
    proc = run_cli(["check-reference"])
    assert proc.returncode == 0
    assert "11.9285 ms / 75.2259 mJ" in proc.stdout
    assert "94.2257 ms / 445.331 mJ" in proc.stdout


def test_compare_reference_route_prints_pair_and_note():
    proc = run_cli(["compare", "--policies", "e2e,l4",
                    "--reference", str(data_path("fig12_reference.csv"))])
    assert proc.returncode == 0
    assert "L4,83.47,79.43," in proc.stdout
    assert "transposed" in proc.stderr


def test_plan_prints_conv_conflict_note():
    proc = run_cli(["plan", "--policies", "l3"])
    assert proc.returncode == 0
    assert "810" in proc.stderr and "960" in proc.stderr
    assert "CONV1,forward_conv,type_i,1,2,11x32,704," in proc.stdout


def test_shapes_output_is_deterministic():
    a = run_cli(["shapes", "--policies", "l3"])
    b = run_cli(["shapes", "--policies", "l3"])
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_sweep_json_format():
    proc = run_cli(["sweep", "--batch", "2", "--policies", "e2e,l2", "--format", "json"])
    assert proc.returncode == 0
    import json
    data = json.loads(proc.stdout)
    assert {r["policy"] for r in data} == {"E2E", "L2"}


def test_out_writes_file_and_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    proc = run_cli(["sweep", "--batch", "1..4", "--policies", "e2e,l4",
                    "--out", str(out)])
    assert proc.returncode == 0
    assert out.exists()
    assert (tmp_path / "sweep.png").exists()


def test_no_figures_flag(tmp_path):
    out = tmp_path / "sweep.csv"
    proc = run_cli(["sweep", "--batch", "2", "--policies", "e2e,l4",
                    "--out", str(out), "--no-figures"])
    assert proc.returncode == 0
    assert out.exists()
    assert not (tmp_path / "sweep.png").exists()


def test_config_env_var(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("policies: [e2e, l2]\nbatch: '2'\n")
    import os
    env = dict(os.environ, NVMRLSIM_CONFIG=str(cfg))
    proc = subprocess.run([sys.executable, "-m", "nvmrlsim.cli", "sweep"],
                          capture_output=True, text=True, env=env, timeout=300)
    assert proc.returncode == 0
    lines = proc.stdout.strip().split("\n")
    assert len(lines) == 3  # header + two policies at one batch size
    assert lines[1].startswith("E2E,2,")


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("policies: [e2e, l2]\nbatch: '2'\n")
    proc = run_cli(["sweep", "--config", str(cfg), "--batch", "8", "--policies", "l3"])
    assert proc.returncode == 0
    lines = proc.stdout.strip().split("\n")
    assert len(lines) == 2
    assert lines[1].startswith("L3,8,")


def test_main_callable_directly():
    assert main(["check-reference"]) == 0
