"""Tests for the runtime directory resolver."""

from pathlib import Path

from rtmpc_il._core.paths import RUN_SUBDIRS, RunLayout, output_root, runtime_dir


def test_runtime_dir_follows_scitex_dir(tmp_path):
    assert runtime_dir() == tmp_path / "scitex" / "rtmpc-il" / "runtime"
    assert output_root() == runtime_dir() / "runs"


def test_output_root_env_wins(monkeypatch, tmp_path):
    monkeypatch.setenv("RTMPC_IL_OUTPUT_ROOT", str(tmp_path / "elsewhere"))

    assert output_root() == tmp_path / "elsewhere"


def test_bare_run_name_goes_under_output_root():
    assert RunLayout("exp1").root == output_root() / "exp1"


def test_relative_path_with_separator_is_kept():
    assert RunLayout("runs/exp1").root == Path("runs/exp1")


def test_ensure_creates_subdirectories(tmp_path):
    layout = RunLayout(tmp_path / "run").ensure()

    for sub in RUN_SUBDIRS:
        assert (layout.root / sub).is_dir()
    assert layout.tube_artifact == tmp_path / "run" / "artifacts" / "tube.json"


def test_checkpoint_names_are_filesystem_safe(tmp_path):
    layout = RunLayout(tmp_path)

    assert layout.checkpoint("dagger+sa_dense", 3).name == "dagger_sa_dense_demo003.json"
