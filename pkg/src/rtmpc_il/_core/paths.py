"""Runtime directory resolver for rtmpc-il.

Run directories live under::

    $RTMPC_IL_OUTPUT_ROOT/<run>/

which defaults to ``$SCITEX_DIR/rtmpc-il/runtime/runs``; `$SCITEX_DIR`
defaults to ``~/.scitex``. Every run directory has the same layout::

    config.resolved.yaml
    artifacts/      tube + LQR artifacts
    checkpoints/    policy checkpoints
    results/        metrics JSON, comparison CSV, sweep jobs
    episodes/       per-episode CSV files
"""

from __future__ import annotations

import os as _os
from pathlib import Path as _Path

__all__ = [
    "scitex_dir",
    "package_dir",
    "runtime_dir",
    "output_root",
    "RunLayout",
    "RUN_SUBDIRS",
]

_PKG_SHORT = "rtmpc-il"

RUN_SUBDIRS = ("artifacts", "checkpoints", "results", "episodes")


def scitex_dir() -> _Path:
    """Return ``$SCITEX_DIR`` (default ``~/.scitex``) as a Path."""
    return _Path(_os.environ.get("SCITEX_DIR", _os.path.expanduser("~/.scitex")))


def package_dir() -> _Path:
    """``$SCITEX_DIR/rtmpc-il/``."""
    return scitex_dir() / _PKG_SHORT


def runtime_dir() -> _Path:
    """``$SCITEX_DIR/rtmpc-il/runtime/``."""
    return package_dir() / "runtime"


def output_root() -> _Path:
    """Root of run directories (``$RTMPC_IL_OUTPUT_ROOT`` wins)."""
    env = _os.environ.get("RTMPC_IL_OUTPUT_ROOT")
    if env:
        return _Path(env).expanduser()
    return runtime_dir() / "runs"


class RunLayout:
    """Fixed layout of one run directory.

    Parameters
    ----------
    root : str or Path
        The run directory. Relative names without a separator are placed
        under :func:`output_root`.
    """

    CONFIG_ECHO = "config.resolved.yaml"

    def __init__(self, root):
        root = _Path(root).expanduser()
        if not root.is_absolute() and len(root.parts) == 1 and not root.exists():
            root = output_root() / root
        self.root = root

    def __repr__(self) -> str:
        return f"RunLayout({str(self.root)!r})"

    def ensure(self) -> "RunLayout":
        """Create the run directory and its subdirectories."""
        for sub in RUN_SUBDIRS:
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        return self

    @property
    def config_echo(self) -> _Path:
        return self.root / self.CONFIG_ECHO

    @property
    def artifacts(self) -> _Path:
        return self.root / "artifacts"

    @property
    def checkpoints(self) -> _Path:
        return self.root / "checkpoints"

    @property
    def results(self) -> _Path:
        return self.root / "results"

    @property
    def episodes(self) -> _Path:
        return self.root / "episodes"

    @property
    def tube_artifact(self) -> _Path:
        return self.artifacts / "tube.json"

    def checkpoint(self, method: str, demos: int) -> _Path:
        return self.checkpoints / f"{method.replace('+', '_')}_demo{demos:03d}.json"


# EOF
