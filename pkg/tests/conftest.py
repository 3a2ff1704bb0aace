"""Pytest configuration and fixtures for rtmpc_il tests."""

import os
import sysconfig
from pathlib import Path

import numpy as np
import pytest

# ---------------------------------------------------------------------------
# Subprocess coverage wiring. Force-set so child interpreters spawned by
# tests (sweep worker processes included) inherit coverage.
# ---------------------------------------------------------------------------
_REPO_ROOT = Path(__file__).resolve().parent.parent
os.environ["COVERAGE_PROCESS_START"] = str(_REPO_ROOT / "pyproject.toml")
os.environ["COVERAGE_FILE"] = str(_REPO_ROOT / ".coverage")

try:
    _SITE = Path(sysconfig.get_paths()["purelib"])
    _PTH = _SITE / "coverage_subprocess.pth"
    _SHIM = "import coverage; coverage.process_startup()"
    if not _PTH.exists() or _PTH.read_text().strip() != _SHIM:
        _PTH.write_text(_SHIM + "\n")
except Exception:
    pass

# Desk-scale reproduction runs take minutes; they only run on request.
_ACCEPTANCE_ENV = "RTMPC_IL_ACCEPTANCE"
_ACCEPTANCE_DIR = "acceptance"


def pytest_collection_modifyitems(config, items):
    """Auto-skip tests under tests/acceptance/ unless RTMPC_IL_ACCEPTANCE=1."""
    if os.environ.get(_ACCEPTANCE_ENV) == "1":
        return
    skip_slow = pytest.mark.skip(
        reason=f"acceptance run (set {_ACCEPTANCE_ENV}=1 to enable)"
    )
    for item in items:
        if _ACCEPTANCE_DIR in Path(str(item.fspath)).parts:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def isolated_runtime(tmp_path, monkeypatch):
    """Keep run directories and config lookups inside tmp_path."""
    monkeypatch.setenv("SCITEX_DIR", str(tmp_path / "scitex"))
    monkeypatch.delenv("RTMPC_IL_CONFIG", raising=False)
    monkeypatch.delenv("RTMPC_IL_OUTPUT_ROOT", raising=False)
    monkeypatch.delenv("RTMPC_IL_WORKERS", raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def double_integrator():
    """x+ = [[1, dt], [0, 1]] x + [[0], [dt]] u with dt = 0.1."""
    from rtmpc_il import LtiModel

    return LtiModel(A=[[1.0, 0.1], [0.0, 1.0]], B=[[0.0], [0.1]], dt=0.1)


@pytest.fixture
def small_task():
    """Short-horizon quadrotor task with the default disturbance and tube settings."""
    from rtmpc_il import TaskSpec

    return TaskSpec(name="T1", horizon=10, duration=2.0)


@pytest.fixture(scope="session")
def default_tube():
    """Tube and LQR gain of the default configuration, estimated once."""
    from rtmpc_il import TaskSpec

    expert = TaskSpec(name="T1", horizon=10).build_expert()
    return expert.tube, expert.lqr


@pytest.fixture
def small_expert(small_task, default_tube):
    """RTMPC expert for ``small_task`` sharing the session tube."""
    tube, lqr = default_tube
    return small_task.build_expert(tube=tube, lqr=lqr)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
