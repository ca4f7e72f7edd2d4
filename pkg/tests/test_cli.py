"""Command-line verbs: artifacts, exit codes, determinism."""
import shutil
import subprocess

import numpy as np
import pytest

from injectlab.cli import build_parser, main
from injectlab.io import read_csv, read_metrics

RUN_CONFIG = """
# short regulation experiment
epsilon = 4e-3
t_end = 0.2
x0 = 0.5, 0.0, 0.2
disturbance = 0.1: -2.0
reference = none
stride = 100
"""

SWEEP_CONFIG = """
epsilons = 4e-3, 2e-3, 1e-3
t_end = 0.5
disturbance = 0.1: -2.0
reference = none
stride = 1
"""

NOISE_CONFIG = """
epsilon = 1e-3
noise_sample_time = 1e-5
noise_power = 1e-11
noise_seed = 2
duration = 8.0
reference = none
disturbance = none
"""


def write_config(tmp_path, text, name="experiment.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parser_requires_a_verb():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_run_emits_trajectory_and_metrics(tmp_path):
    cfg = write_config(tmp_path, RUN_CONFIG)
    out = tmp_path / "results"
    assert main(["run", str(cfg), str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 5001 // 100 + 1  # header + strided samples
    metrics = read_metrics(out / "metrics.txt")
    assert {"sup_tracking_error", "final_tracking_error", "sup_abs_u",
            "settling_threshold", "settling_time"} <= set(metrics)
    cols = read_csv(out / "trajectory.csv")
    assert cols["t"][0] == 0.0 and cols["t"][-1] == 0.2


def test_repeat_runs_emit_identical_bytes(tmp_path):
    cfg = write_config(tmp_path, RUN_CONFIG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), str(out_a)]) == 0
    assert main(["run", str(cfg), str(out_b)]) == 0
    assert (out_a / "trajectory.csv").read_bytes() == (out_b / "trajectory.csv").read_bytes()
    assert (out_a / "metrics.txt").read_bytes() == (out_b / "metrics.txt").read_bytes()


def test_outdir_is_created_recursively(tmp_path):
    cfg = write_config(tmp_path, RUN_CONFIG)
    out = tmp_path / "deep" / "nested" / "dir"
    assert main(["run", str(cfg), str(out)]) == 0
    assert (out / "trajectory.csv").exists()


@pytest.mark.parametrize("verb,text", [
    ("run", "epsilon = fast\n"),
    ("run", "injection_gain = 2.0\n"),
    ("run", "epsilon = 1e-3\nduration = 4.0\n"),  # verb-reserved key elsewhere
    ("sweep", "t_end = 0.5\ndisturbance = none\nreference = none\n"),
    ("sweep", "epsilons = 4e-3, fast\nreference = none\n"),
    ("sweep", "epsilons = 4e-3, 2e-3\nt_end = 0.5\nreference = none\ndisturbance = none\n"),
    ("noise", "epsilon = 1e-3\nreference = none\ndisturbance = none\n"),
    ("noise", NOISE_CONFIG + "duration = oops\n"),
])
def test_config_problems_exit_2(tmp_path, verb, text, capsys):
    # the duplicate-duration case exercises the parse-level duplicate error
    cfg = write_config(tmp_path, text)
    assert main([verb, str(cfg), str(tmp_path / "out")]) == 2
    assert "injectlab:" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.cfg"), str(tmp_path / "out")]) == 2
    assert "config" in capsys.readouterr().err


def test_numerical_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, """
epsilon = 4e-3
t_end = 0.12
x0 = 1e150, 0.0, 0.2
disturbance = none
reference = none
""")
    assert main(["run", str(cfg), str(tmp_path / "out")]) == 3
    assert "non-finite" in capsys.readouterr().err


def test_sweep_emits_table_and_slopes(tmp_path):
    cfg = write_config(tmp_path, SWEEP_CONFIG)
    out = tmp_path / "sweep"
    assert main(["sweep", str(cfg), str(out)]) == 0
    cols = read_csv(out / "order_study.csv")
    assert np.array_equal(cols["epsilon"], [4e-3, 2e-3, 1e-3])
    metrics = read_metrics(out / "metrics.txt")
    assert metrics["slope_sup_x_raw"] == pytest.approx(1.0, abs=0.3)
    assert metrics["slope_sup_eta"] == pytest.approx(2.0, abs=0.4)
    assert metrics["slope_err_ybar"] == pytest.approx(2.0, abs=0.3)
    assert metrics["usable_sup_x_raw"] is True


def test_noise_study_ratios_near_one(tmp_path):
    cfg = write_config(tmp_path, NOISE_CONFIG)
    out = tmp_path / "noise"
    assert main(["noise", str(cfg), str(out)]) == 0
    lines = (out / "noise_study.csv").read_text().strip().splitlines()
    assert len(lines) == 4  # header + base + double_n + double_amplitude
    metrics = read_metrics(out / "metrics.txt")
    for label in ("base", "double_n", "double_amplitude"):
        assert metrics[f"{label}_ratio_var_ybar"] == pytest.approx(1.0, abs=0.15)
        assert metrics[f"{label}_ratio_var_yv"] == pytest.approx(1.0, abs=0.15)
    quarter = metrics["double_amplitude_measured_var_yv"] / metrics["base_measured_var_yv"]
    assert quarter == pytest.approx(0.25, rel=1e-9)


def test_console_script_smoke(tmp_path):
    exe = shutil.which("injectlab")
    assert exe is not None, "console script not on PATH"
    cfg = write_config(tmp_path, """
epsilon = 4e-3
h_step = 1e-3
t_end = 3e-3
stride = 1
disturbance = none
reference = none
""")
    out = tmp_path / "out"
    proc = subprocess.run([exe, "run", str(cfg), str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "trajectory.csv").exists()
