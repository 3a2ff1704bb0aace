#!/usr/bin/env python3
"""Shared helpers for CLI commands."""

import hashlib
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from .. import __version__
from .._core.config import RunConfig, config_hash, load_config
from .._core.errors import CheckpointSchemaError, ConfigError, InvalidParameterError
from .._core.export import load_tube_artifact, save_tube_artifact
from .._core.linmodel import CostWeights, disturbance_box, linearize_quadrotor_hover
from .._core.paths import RunLayout
from .._core.riccati import lqr_weights
from .._core.tube import estimate_invariant_box

logger = logging.getLogger(__name__)

err_console = Console(stderr=True)


def setup_logging(verbose: int = 0, quiet: bool = False) -> None:
    """Install one RichHandler on the root logger.

    WARNING with ``quiet``, INFO by default, DEBUG from ``-v``.
    """
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    handler = RichHandler(console=err_console, show_path=verbose > 1, rich_tracebacks=verbose > 1)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.setLevel(level)


def fail(error) -> None:
    """Print a red error line and exit 1."""
    click.secho(f"Error: {error}", fg="red", err=True)
    sys.exit(1)


def load_run_config(ctx: click.Context, overrides: Sequence[str] = ()) -> RunConfig:
    """Resolve the config from the root group's options plus ``overrides``.

    Configuration problems become usage errors (exit 2).
    """
    obj = ctx.find_root().obj or {}
    try:
        return load_config(
            obj.get("config_path"),
            overrides=[*obj.get("overrides", ()), *overrides],
            output_dir=obj.get("output_dir"),
            workers=obj.get("workers"),
            master_seed=obj.get("seed"),
        )
    except ConfigError as e:
        raise click.UsageError(str(e), ctx=ctx) from e


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_metadata(cfg: RunConfig) -> dict:
    return {"config_hash": config_hash(cfg), "version": __version__, "master_seed": cfg.master_seed}


def tube_settings(task) -> dict:
    """Inputs that determine the tube and gain stored in an artifact."""
    return {
        "dt": float(task.dt),
        "w_fraction": float(task.w_fraction),
        "q_diag": [float(q) for q in task.q_diag],
        "r_diag": [float(r) for r in task.r_diag],
        "n_rollouts": int(task.tube_rollouts),
        "horizon": int(task.tube_horizon),
        "seed": int(task.tube_seed),
    }


def compute_tube(cfg: RunConfig, path) -> tuple:
    """Linearize, solve the DARE, estimate the tube and write the artifact.

    Returns:
        (tube, lqr, model, W, path)
    """
    task = cfg.to_task()
    model = linearize_quadrotor_hover(task.params, task.dt)
    _, lqr = lqr_weights(model, CostWeights.from_diagonals(task.q_diag, task.r_diag))
    W = disturbance_box(task.params, task.w_fraction, task.dt)
    tube = estimate_invariant_box(
        lqr.closed_loop(model),
        W,
        n_rollouts=task.tube_rollouts,
        horizon=task.tube_horizon,
        seed=task.tube_seed,
    )
    meta = {**run_metadata(cfg), "tube_settings": tube_settings(task)}
    path = save_tube_artifact(path, tube, lqr, model, W, metadata=meta)
    logger.info("Tube artifact written to %s", path)
    return tube, lqr, model, W, path


def prepare_expert(cfg: RunConfig, layout: RunLayout, tube_path: Optional[str] = None):
    """Expert for ``cfg`` from a tube artifact, computing one if needed.

    An explicit ``tube_path`` must exist and match the model and tube
    settings of ``cfg``. The run directory's artifact is reused when it
    matches and recomputed when it does not.

    Raises:
        CheckpointSchemaError: explicit artifact built for another setup
    """
    task = cfg.to_task()
    path = Path(tube_path) if tube_path else layout.tube_artifact
    if path.exists():
        tube, lqr, model, meta = load_tube_artifact(path)
        stale = _artifact_mismatch(task, model, meta)
        if stale and tube_path:
            raise CheckpointSchemaError(f"Tube artifact {path} was built for a different {stale}")
        if stale:
            logger.warning("Tube artifact %s was built for a different %s; recomputing", path, stale)
            tube, lqr, _model, _W, _ = compute_tube(cfg, path)
        else:
            logger.info("Using tube artifact %s", path)
    elif tube_path:
        raise click.UsageError(f"Tube artifact not found: {tube_path}")
    else:
        tube, lqr, _model, _W, _ = compute_tube(cfg, path)
    return task.build_expert(tube=tube, lqr=lqr)


def _artifact_mismatch(task, model, meta: dict) -> str:
    """Empty string when an artifact fits ``task``, else what differs."""
    expected = linearize_quadrotor_hover(task.params, task.dt)
    if model.A.shape != expected.A.shape or not (
        np.allclose(model.A, expected.A) and np.allclose(model.B, expected.B)
    ):
        return "model"
    stored = meta.get("tube_settings") or {}
    changed = sorted(k for k, v in tube_settings(task).items() if stored.get(k) != v)
    return f"tube setting ({', '.join(changed)})" if changed else ""


def parse_methods(value: Optional[str]) -> Optional[list]:
    """``"bc+none, dagger+sa_sparse"`` -> list of names."""
    if value is None:
        return None
    names = [v.strip() for v in value.split(",") if v.strip()]
    if not names:
        raise click.BadParameter("at least one method is required")
    return names


LIBRARY_ERRORS = (InvalidParameterError, CheckpointSchemaError, ArithmeticError, RuntimeError, OSError)


__all__ = [
    "setup_logging",
    "fail",
    "load_run_config",
    "file_digest",
    "run_metadata",
    "tube_settings",
    "compute_tube",
    "prepare_expert",
    "parse_methods",
    "LIBRARY_ERRORS",
    "err_console",
]

# EOF
