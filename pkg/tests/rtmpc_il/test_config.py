"""Tests for run configuration loading, overrides and hashing."""

from pathlib import Path

import pytest

from rtmpc_il import ConfigError, RunConfig, config_hash, load_config
from rtmpc_il._core.config import DEFAULT_METHODS, apply_override, resolve_config_path


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "model:\n  horizon: 12\n"
        "disturbance:\n  task: T2\n  w_fraction: 0.1\n"
        "il:\n  epochs: 3\n  hidden: [16]\n"
        "master_seed: 4\n"
    )
    return path


# ---------- Defaults ----------


def test_defaults_match_the_reference_setup():
    cfg = load_config()

    assert cfg.model.horizon == 30
    assert cfg.model.dt == 0.1
    assert cfg.disturbance.w_fraction == 0.3
    assert cfg.tube.n_rollouts == 10000
    assert cfg.eval.methods == DEFAULT_METHODS
    assert len(DEFAULT_METHODS) == 8


def test_default_task_and_il_config():
    cfg = load_config()

    task = cfg.to_task()
    il = cfg.to_il_config()

    assert task.name == "T1"
    assert task.horizon == 30
    assert il.name == "bc+sa_sparse"
    assert il.seed == cfg.master_seed


# ---------- Resolution ----------


def test_explicit_file_is_loaded(config_file):
    cfg = load_config(config_file)

    assert cfg.model.horizon == 12
    assert cfg.to_task().name == "T2"
    assert cfg.il.hidden == [16]
    assert cfg.master_seed == 4


def test_missing_explicit_file_raises(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.yaml")


def test_local_file_wins_over_environment(tmp_path, monkeypatch, config_file):
    (tmp_path / "rtmpc-il.yaml").write_text("model:\n  horizon: 7\n")
    monkeypatch.setenv("RTMPC_IL_CONFIG", str(config_file))

    assert resolve_config_path() == Path.cwd() / "rtmpc-il.yaml"
    assert load_config().model.horizon == 7


def test_environment_file_is_used_without_local_file(monkeypatch, config_file):
    monkeypatch.setenv("RTMPC_IL_CONFIG", str(config_file))

    assert load_config().model.horizon == 12


def test_environment_pointing_nowhere_raises(monkeypatch, tmp_path):
    monkeypatch.setenv("RTMPC_IL_CONFIG", str(tmp_path / "gone.yaml"))

    with pytest.raises(ConfigError):
        load_config()


# ---------- Overrides ----------


def test_overrides_are_parsed_as_yaml(config_file):
    cfg = load_config(config_file, overrides=["il.hidden=[64, 64]", "eval.methods=[bc+none, dagger+dr]"])

    assert cfg.il.hidden == [64, 64]
    assert [m.name for m in cfg.method_configs()] == ["bc+none", "dagger+dr"]


def test_scalars_win_over_file(config_file):
    cfg = load_config(config_file, master_seed=9, workers=None, output_dir="out")

    assert cfg.master_seed == 9
    assert cfg.workers is None
    assert cfg.output_dir == "out"


@pytest.mark.parametrize("assignment", ["novalue", "=3", "model.horizon.deep=1"])
def test_malformed_overrides_raise(assignment):
    data = {"model": {"horizon": 3}}

    with pytest.raises(ConfigError):
        apply_override(data, assignment)


@pytest.mark.parametrize(
    "overrides",
    [
        ["colour=blue"],
        ["model.wingspan=2"],
        ["il.method=gail"],
        ["disturbance.task=T9"],
        ["eval.domains=[moon]"],
        ["eval.seeds=0"],
        ["disturbance.w_fraction=0.5"],
    ],
)
def test_invalid_settings_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides)


def test_non_mapping_file_raises(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- a\n- b\n")

    with pytest.raises(ConfigError, match="mapping"):
        load_config(path)


# ---------- Hash and layout ----------


def test_hash_ignores_output_dir_and_workers():
    a = load_config(output_dir="a", workers=1)
    b = load_config(output_dir="b", workers=8)

    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64


def test_hash_changes_with_results_relevant_values():
    assert config_hash(load_config()) != config_hash(load_config(overrides=["il.epochs=5"]))


def test_default_layout_lives_under_output_root(monkeypatch, tmp_path):
    monkeypatch.setenv("RTMPC_IL_OUTPUT_ROOT", str(tmp_path / "runs"))
    cfg = load_config()

    layout = cfg.layout()

    assert layout.root.parent == tmp_path / "runs"
    assert layout.root.name == f"T1-{config_hash(cfg)[:10]}"


def test_write_resolved_round_trips(tmp_path):
    cfg = load_config(overrides=["il.epochs=5"], output_dir=str(tmp_path / "run"))

    path = cfg.write_resolved(cfg.layout())

    assert load_config(path).il.epochs == 5


def test_worker_count_precedence(monkeypatch):
    monkeypatch.setenv("RTMPC_IL_WORKERS", "3")

    assert RunConfig(workers=2).worker_count() == 2
    assert RunConfig().worker_count() == 3


def test_bad_worker_env_raises(monkeypatch):
    monkeypatch.setenv("RTMPC_IL_WORKERS", "many")

    with pytest.raises(ConfigError):
        RunConfig().worker_count()


def test_multi_trajectory_sets_reference_distribution():
    cfg = load_config(overrides=["eval.multi_trajectory=true"])

    assert cfg.to_task().distribution is not None
