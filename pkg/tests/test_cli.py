"""Command-line entry points, exit codes and emitted artifacts."""

import os
import subprocess
import sys

import pytest

import srblab as sl

CLI = [sys.executable, "-m", "srblab.cli"]


def run_cli(*args, **kw):
    return subprocess.run(CLI + list(args), capture_output=True, text=True, **kw)


def write_cfg(tmp_path, **overrides):
    cfg = sl.ExperimentConfig(**overrides)
    path = str(tmp_path / "run.cfg")
    sl.save_config(cfg, path)
    return path


def test_help_lists_all_subcommands():
    out = run_cli("--help")
    assert out.returncode == 0
    for sub in ("entropy", "induce", "density", "tail", "sweep", "probe"):
        assert sub in out.stdout


def test_entropy_subcommand(tmp_path):
    path = write_cfg(tmp_path, family="doubling", out_dir=str(tmp_path / "out"),
                     bins=512, sample_size=8, n_iters=5000, smb_depth=16,
                     tau_max=12, seed=1)
    out = run_cli("entropy", "--config", path)
    assert out.returncode == 0, out.stderr
    assert os.path.exists(tmp_path / "out" / "entropy.csv")
    assert "h_abramov" in out.stdout


def test_induce_subcommand(tmp_path):
    path = write_cfg(tmp_path, family="tent", map_params={"slope": 2.0},
                     out_dir=str(tmp_path / "out"), tau_max=10, seed=0)
    out = run_cli("induce", "--config", path)
    assert out.returncode == 0, out.stderr
    assert os.path.exists(tmp_path / "out" / "tower.csv")
    assert "cells" in out.stdout


def test_density_subcommand(tmp_path):
    path = write_cfg(tmp_path, family="tent", map_params={"slope": 2.0},
                     out_dir=str(tmp_path / "out"), bins=128, tau_max=10, seed=0)
    out = run_cli("density", "--config", path)
    assert out.returncode == 0, out.stderr
    assert os.path.exists(tmp_path / "out" / "density.csv")


def test_tail_subcommand(tmp_path):
    path = write_cfg(tmp_path, family="doubling", out_dir=str(tmp_path / "out"),
                     tail_lam=0.5, tail_n_max=20, tail_sample_size=100, seed=0)
    out = run_cli("tail", "--config", path)
    assert out.returncode == 0, out.stderr
    assert os.path.exists(tmp_path / "out" / "tail.csv")
    assert os.path.exists(tmp_path / "out" / "tail.svg")


def test_sweep_subcommand_is_deterministic_across_workers(tmp_path):
    path = write_cfg(tmp_path, family="tent", sweep_parameter="slope",
                     sweep_from=1.6, sweep_to=2.0, sweep_steps=3,
                     out_dir=str(tmp_path / "out"), seed=4, bins=128,
                     sample_size=4, n_iters=1000, smb_depth=4, tau_max=8)
    out1 = run_cli("sweep", "--config", path, "--workers", "1")
    assert out1.returncode == 0, out1.stderr
    csv1 = open(tmp_path / "out" / "sweep.csv", "rb").read()
    out2 = run_cli("sweep", "--config", path, "--workers", "2")
    assert out2.returncode == 0, out2.stderr
    csv2 = open(tmp_path / "out" / "sweep.csv", "rb").read()
    assert csv1 == csv2


def test_probe_subcommand(tmp_path):
    path = write_cfg(tmp_path, family="viana",
                     map_params={"alpha": 0.01, "d": 16},
                     out_dir=str(tmp_path / "out"), sample_size=64, seed=0)
    out = run_cli("probe", "--config", path)
    assert out.returncode == 0, out.stderr


def test_seed_flag_overrides_the_config(tmp_path):
    path = write_cfg(tmp_path, family="doubling", out_dir=str(tmp_path / "a"),
                     tail_lam=0.5, tail_n_max=20, tail_sample_size=100, seed=0)
    out = run_cli("tail", "--config", path, "--seed", "9",
                  "--out", str(tmp_path / "b"))
    assert out.returncode == 0, out.stderr
    text = open(tmp_path / "b" / "tail.csv").read()
    assert "seed = 9" in text


def test_out_flag_redirects_artifacts(tmp_path):
    path = write_cfg(tmp_path, family="tent", map_params={"slope": 2.0},
                     out_dir=str(tmp_path / "ignored"), bins=64, tau_max=8,
                     seed=0)
    out = run_cli("density", "--config", path, "--out", str(tmp_path / "redirect"))
    assert out.returncode == 0, out.stderr
    assert os.path.exists(tmp_path / "redirect" / "density.csv")
    assert not os.path.exists(tmp_path / "ignored")


def test_missing_config_exits_4(tmp_path):
    out = run_cli("entropy", "--config", str(tmp_path / "nope.cfg"))
    assert out.returncode == 4
    assert out.stderr != ""


def test_invalid_config_value_exits_2(tmp_path):
    path = write_cfg(tmp_path, family="tent", map_params={"slope": 2.0},
                     out_dir=str(tmp_path / "out"), bins=-5, tau_max=8, seed=0)
    out = run_cli("density", "--config", path)
    assert out.returncode == 2
    assert "bins" in out.stderr


def test_degenerate_induction_exits_3(tmp_path):
    path = write_cfg(tmp_path, family="tent", map_params={"slope": 1.5},
                     out_dir=str(tmp_path / "out"), induce_lo=0.45,
                     induce_hi=0.46, tau_max=1, seed=0)
    out = run_cli("induce", "--config", path)
    assert out.returncode == 3
    assert "cells" in out.stderr
