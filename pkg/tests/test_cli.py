import subprocess
import sys

import numpy as np

from romlab.cli import FILES, STAGES, run_subcommand
from romlab.regress import RidgeModel, save_model

SMALL = """\
[generate]
n = 64
viscosity = 0.02
n_snapshots = 80
sample_dt = 0.02
[problem]
r = 2
big_r = 6
fractions = 0.25, 0.25, 0.5
[stepper]
substeps = 10
order = 3
[model]
family = {family}
grid = {grid}
seeds = 2
"""


def write_config(tmp_path, family="lr", grid='[{"alpha": 1e-3}, {"alpha": 1.0}]'):
    path = tmp_path / f"{family}.ini"
    path.write_text(SMALL.format(family=family, grid=grid))
    return str(path)


def outputs(out, family="lr"):
    names = [v for k, v in FILES.items() if k != "model"]
    names.append("model.txt" if family == "sr" else "model.bin")
    return {n: (out / n).read_bytes() for n in names}


def test_pipeline_writes_every_output(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert run_subcommand(["pipeline", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert [line.split(":")[0] for line in printed] == list(STAGES)
    files = outputs(tmp_path / "o")
    assert files["report.csv"].startswith(b"# romlab ")
    assert b"metric,window,seed,value" in files["report.csv"]


def test_bundled_config_smoke(tmp_path):
    assert run_subcommand(["pipeline", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "report.csv").stat().st_size > 0
    assert (tmp_path / "energy.csv").read_text().count("\n") > 800


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, "nn", '[{"widths": (4,), "epochs": 2}]')
    for name in ("a", "b"):
        assert run_subcommand(["pipeline", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    assert outputs(tmp_path / "a", "nn") == outputs(tmp_path / "b", "nn")


def test_pipeline_equals_stages(tmp_path):
    cfg = write_config(tmp_path)
    assert run_subcommand(["pipeline", "--config", cfg, "--out", str(tmp_path / "p")]) == 0
    for stage in STAGES:
        assert run_subcommand([stage, "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    assert outputs(tmp_path / "p") == outputs(tmp_path / "s")


def test_r_not_below_big_r_is_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = str(tmp_path / "o")
    assert run_subcommand(["generate", "--config", cfg, "--out", out]) == 0
    assert run_subcommand(["pod", "--config", cfg, "--out", out]) == 0
    assert run_subcommand(["targets", "--config", cfg, "--out", out, "--r", "6"]) == 1
    assert "r < R" in capsys.readouterr().err


def test_divergent_rom_run(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    assert run_subcommand(["pipeline", "--config", cfg, "--out", str(out)]) == 0
    save_model(RidgeModel(np.zeros(2), 1e3 * np.eye(2)), str(out / "model.bin"))
    assert run_subcommand(["rom-run", "--config", cfg, "--out", str(out)]) == 2
    assert "diverged" in capsys.readouterr().err
    text = (out / "rom_energy.csv").read_text()
    assert "status: diverged" in text
    assert "nan" in text.lower()
    assert run_subcommand(["rom-run", "--config", cfg, "--out", str(out), "--no-closure"]) == 0


def test_missing_input_is_io_error(tmp_path):
    cfg = write_config(tmp_path)
    assert run_subcommand(["pod", "--config", cfg, "--out", str(tmp_path / "empty")]) == 3
    assert run_subcommand(["pod", "--config", str(tmp_path / "none.ini")]) == 3


def test_usage_errors(tmp_path):
    assert run_subcommand(["pipeline", "--bogus"]) == 64
    assert run_subcommand([]) == 64
    assert run_subcommand(["train", "--family", "xx"]) == 64


def test_invalid_jobs(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    monkeypatch.setenv("ROMLAB_JOBS", "0")
    assert run_subcommand(["generate", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "romlab", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("romlab ")
    proc = subprocess.run([sys.executable, "-m", "romlab", "frobnicate"],
                          capture_output=True, text=True)
    assert proc.returncode == 64
