"""Tests for rtmpc_il.cli module."""

import json

import pytest
from click.testing import CliRunner

from rtmpc_il.cli import cli

SMALL_CONFIG = """\
model:
  horizon: 10
reference:
  duration: 1.0
il:
  method: bc
  augmentation: none
  epochs: 2
  hidden: [8]
eval:
  seeds: 1
  episodes: 1
  demo_max: 1
  methods: [bc+none]
  domains: [source]
"""


@pytest.fixture
def runner():
    """Create CLI test runner."""
    return CliRunner()


@pytest.fixture
def run_dir(tmp_path):
    """Write a fast ./rtmpc-il.yaml and return the run directory to use."""
    (tmp_path / "rtmpc-il.yaml").write_text(SMALL_CONFIG)
    return tmp_path / "run"


def _json(result):
    text = result.stdout
    doc, _ = json.JSONDecoder().raw_decode(text[text.index("{") :])
    return doc


# ---------- --help / --version surface ----------


def test_cli_main_help_exits_zero(runner):
    # Arrange
    args = ["--help"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0
    assert "tube" in result.output


@pytest.mark.parametrize("command", ["tube", "train", "eval", "compare", "show-config"])
def test_cli_subcommand_help_exits_zero(runner, command):
    # Arrange
    args = [command, "--help"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0


def test_cli_help_recursive_lists_subcommands(runner):
    result = runner.invoke(cli, ["--help-recursive"])

    assert result.exit_code == 0
    assert "rtmpc-il compare" in result.output


def test_cli_version_flag(runner):
    from rtmpc_il import __version__

    result = runner.invoke(cli, ["-V"])

    assert result.exit_code == 0
    assert __version__ in result.output


@pytest.mark.parametrize("alias, target", [("evaluate", "eval"), ("sweep", "compare"), ("config", "show-config")])
def test_cli_aliases_resolve(runner, alias, target):
    result = runner.invoke(cli, [alias, "--help"])

    assert result.exit_code == 0
    assert target in result.output


# ---------- show-config ----------


def test_show_config_json_reports_hash_and_overrides(runner, run_dir):
    # Arrange
    args = ["--set", "il.epochs=7", "-o", str(run_dir), "show-config", "--json"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0
    info = _json(result)
    assert info["config"]["il"]["epochs"] == 7
    assert info["config"]["model"]["horizon"] == 10
    assert len(info["config_hash"]) == 64
    assert info["run_dir"] == str(run_dir)


@pytest.mark.parametrize("override", ["il.method=gail", "nonsense", "model.unknown=1"])
def test_bad_override_is_a_usage_error(runner, run_dir, override):
    result = runner.invoke(cli, ["--set", override, "show-config"])

    assert result.exit_code == 2


def test_missing_config_file_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(cli, ["--config", str(tmp_path / "none.yaml"), "show-config"])

    assert result.exit_code == 2
    assert "not found" in result.output


# ---------- tube ----------


def test_tube_writes_artifact_and_resolved_config(runner, run_dir):
    # Arrange
    args = ["-o", str(run_dir), "tube", "--json"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0, result.output
    doc = _json(result)
    assert doc["spectral_radius"] < 1.0
    assert len(doc["z_box"]["upper"]) == 8
    assert (run_dir / "artifacts" / "tube.json").exists()
    assert (run_dir / "config.resolved.yaml").exists()


def test_tube_reports_infeasible_axis_and_keeps_artifact(runner, run_dir):
    # Velocity tube exceeds a 0.05 m/s limit
    args = ["-o", str(run_dir), "--set", "model.velocity_limit=0.05", "tube"]

    result = runner.invoke(cli, args)

    assert result.exit_code == 1
    assert "vx" in result.output
    assert (run_dir / "artifacts" / "tube.json").exists()


def _tube_settings(path):
    return json.loads(path.read_text())["metadata"]["tube_settings"]


def test_tube_artifact_records_tube_settings(runner, run_dir):
    result = runner.invoke(cli, ["-o", str(run_dir), "tube"])

    assert result.exit_code == 0, result.output
    settings = _tube_settings(run_dir / "artifacts" / "tube.json")
    assert settings["w_fraction"] == 0.3
    assert settings["n_rollouts"] == 10000
    assert settings["horizon"] == 200
    assert len(settings["r_diag"]) == 3


def test_stale_run_artifact_is_recomputed(runner, run_dir):
    # Arrange
    runner.invoke(cli, ["-o", str(run_dir), "tube"])
    args = ["-o", str(run_dir), "--set", "disturbance.w_fraction=0.2", "eval", "--expert", "-d", "source"]
    # Act
    result = runner.invoke(cli, [*args, "--no-save-episodes"])
    # Assert
    assert result.exit_code == 0, result.output
    assert _tube_settings(run_dir / "artifacts" / "tube.json")["w_fraction"] == 0.2


def test_explicit_artifact_with_other_settings_is_rejected(runner, run_dir, tmp_path):
    # Arrange
    artifact = tmp_path / "shared_tube.json"
    runner.invoke(cli, ["-o", str(run_dir), "tube", "--out", str(artifact)])
    before = artifact.read_bytes()
    # Act
    result = runner.invoke(
        cli,
        ["-o", str(run_dir), "--set", "disturbance.w_fraction=0.2", "eval", "--expert", "--tube", str(artifact)],
    )
    # Assert
    assert result.exit_code == 1
    assert "w_fraction" in result.output
    assert artifact.read_bytes() == before


# ---------- train / eval ----------


def test_train_writes_checkpoint_and_stats(runner, run_dir):
    # Arrange
    args = ["-o", str(run_dir), "train", "-m", "bc+none", "-n", "1", "--json"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0, result.output
    stats = _json(result)
    assert stats["method"] == "bc+none"
    assert len(stats["checkpoints"]) == 1
    assert (run_dir / "checkpoints" / "bc_none_demo001.json").exists()
    assert (run_dir / "results" / "train_bc_none.json").exists()
    assert (run_dir / "results" / "dataset_bc_none.csv").exists()


def test_train_rejects_unknown_method(runner, run_dir):
    result = runner.invoke(cli, ["-o", str(run_dir), "train", "-m", "gail+none"])

    assert result.exit_code == 2


def test_eval_expert_in_source_domain(runner, run_dir):
    # Arrange
    args = ["-o", str(run_dir), "eval", "--expert", "-d", "source", "--json"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0, result.output
    doc = _json(result)
    assert doc["metrics"]["source"]["episodes"] == 1
    assert (run_dir / "results" / "eval_expert.json").exists()
    assert list((run_dir / "episodes").glob("expert_source_*.csv"))


def test_eval_trained_checkpoint_reports_expert_gap(runner, run_dir):
    # Arrange
    runner.invoke(cli, ["-o", str(run_dir), "train", "-m", "bc+none", "-n", "1"])
    checkpoint = run_dir / "checkpoints" / "bc_none_demo001.json"
    # Act
    result = runner.invoke(
        cli, ["-o", str(run_dir), "eval", "-c", str(checkpoint), "-d", "source", "--no-save-episodes", "--json"]
    )
    # Assert
    assert result.exit_code == 0, result.output
    doc = _json(result)
    assert "expert_gap" in doc["metrics"]["source"]
    assert doc["results"][0]["method"] == "bc+none"


def test_eval_rejects_checkpoint_with_other_horizon(runner, run_dir):
    runner.invoke(cli, ["-o", str(run_dir), "train", "-m", "bc+none", "-n", "1"])
    checkpoint = run_dir / "checkpoints" / "bc_none_demo001.json"

    result = runner.invoke(
        cli, ["-o", str(run_dir), "--set", "model.horizon=8", "eval", "-c", str(checkpoint), "-d", "source"]
    )

    assert result.exit_code == 1
    assert "horizon" in result.output


def test_eval_needs_exactly_one_controller(runner, run_dir):
    result = runner.invoke(cli, ["-o", str(run_dir), "eval"])

    assert result.exit_code == 2
    assert "exactly one" in result.output


def test_eval_missing_tube_artifact_is_a_usage_error(runner, run_dir, tmp_path):
    result = runner.invoke(
        cli, ["-o", str(run_dir), "eval", "--expert", "--tube", str(tmp_path / "absent.json")]
    )

    assert result.exit_code == 2


# ---------- compare ----------


def test_compare_writes_table_and_summary(runner, run_dir):
    # Arrange
    args = ["-o", str(run_dir), "-j", "1", "compare", "--json"]
    # Act
    result = runner.invoke(cli, args)
    # Assert
    assert result.exit_code == 0, result.output
    summary = _json(result)
    assert [m["method"] for m in summary["methods"]] == ["bc+none"]
    assert (run_dir / "results" / "comparison.csv").exists()
    assert (run_dir / "results" / "comparison_summary.json").exists()
    assert list((run_dir / "results" / "sweep" / "cells").glob("*.json"))


def test_compare_method_option_overrides_config(runner, run_dir):
    result = runner.invoke(cli, ["-o", str(run_dir), "-j", "1", "compare", "-m", "dagger+none", "--json"])

    assert result.exit_code == 0, result.output
    assert [m["method"] for m in _json(result)["methods"]] == ["dagger+none"]
