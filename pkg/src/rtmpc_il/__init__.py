"""
rtmpc_il - Robust tube MPC experts compressed into neural policies.

A robust tube model predictive controller (RTMPC) for a quadrotor acts as
the demonstrator; imitation learning with tube sampling augmentation turns
its demonstrations into a small MLP policy that stays robust to the
disturbances the tube was built for.

Quick Start
-----------

Build the expert and clone it from one demonstration:
    >>> from rtmpc_il import TaskSpec, IlConfig, run_il
    >>> task = TaskSpec(name="T1")
    >>> run = run_il(IlConfig.parse("bc+sa_sparse"), n_demos=1, task=task)
    >>> policy = run.final_policy

Evaluate it in the source and target domains:
    >>> from rtmpc_il import evaluate_policy
    >>> metrics, episodes = evaluate_policy(policy, task, n_episodes=10)

Configuration
-------------

Commands read one YAML file (``--config``, ``./rtmpc-il.yaml`` or
``$RTMPC_IL_CONFIG``) plus ``--set section.key=value`` overrides.
Run directories go below ``$RTMPC_IL_OUTPUT_ROOT`` (default
``~/.scitex/rtmpc-il/runtime/runs``); ``$RTMPC_IL_WORKERS`` sets the
sweep pool size.

Public API
----------

Control:
    linearize_quadrotor_hover(params, dt) -> LtiModel
    solve_dare(model, weights) -> LqrSolution
    estimate_invariant_box(A_K, W) -> TubeApprox
    solve_qp(problem) -> QpSolution
    build_quadrotor_expert(params) -> RtmpcExpert
    mpc_step / rtmpc_step -> RtmpcSolution

Learning:
    sparse_samples / dense_samples / label_actions
    train(policy, data) -> (MlpPolicy, losses)
    collect_demonstration(...) -> Demonstration
    run_il(config, n_demos, task) -> IlRun

Evaluation:
    rollout(controller, reference, disturbance, params, seed) -> Episode
    stage_cost, success_rate, expert_gap, covariate_shift_gap
    evaluate_policy(controller, task) -> (metrics, episodes)
    run_comparison(task, methods, ...) -> ComparisonTable

Classes:
    BoxSet, LtiModel, CostWeights, QuadParams, MlpPolicy, Dataset,
    IlConfig, TaskSpec, RunConfig, ExperimentResult
"""

from __future__ import annotations

# ============================================================================
# .env-respect: walk up from CWD to $HOME, loading every .env we find, so
# RTMPC_IL_* variables in project-local .env files reach the config layer.
# ============================================================================
try:
    from pathlib import Path as _Path

    from scitex_config import PriorityConfig as _PC

    _loader = getattr(_PC, "load_dotenv", None)
    if _loader is None:
        from scitex_config import load_dotenv as _loader  # type: ignore[no-redef]
    _loader(walk_up=True, stop_at=str(_Path.home()))
    del _PC, _Path, _loader
except (ImportError, AttributeError, TypeError):  # TypeError: loader without walk_up/stop_at
    pass

try:
    from importlib.metadata import version as _v, PackageNotFoundError

    try:
        __version__ = _v("rtmpc-il")
    except PackageNotFoundError:
        __version__ = "0.0.0+local"
    del _v, PackageNotFoundError
except ImportError:  # pragma: no cover
    __version__ = "0.0.0+local"

from ._core import (
    # Errors
    InvalidParameterError,
    InfeasibleTighteningError,
    NonConvergenceError,
    NumericError,
    ExpertInfeasibleError,
    SampleSizeError,
    OutOfDistributionError,
    CheckpointSchemaError,
    ConfigError,
    # Control
    BoxSet,
    LtiModel,
    CostWeights,
    linearize_quadrotor_hover,
    disturbance_box,
    tighten_state_box,
    tighten_input_box,
    LqrSolution,
    solve_dare,
    lqr_weights,
    TubeApprox,
    estimate_invariant_box,
    QpProblem,
    QpSettings,
    QpSolution,
    QpSolver,
    solve_qp,
    ReferenceWindow,
    RtmpcExpert,
    RtmpcSolution,
    build_quadrotor_expert,
    mpc_step,
    rtmpc_step,
    # Learning
    AugmentedPair,
    sparse_samples,
    dense_samples,
    label_actions,
    MlpPolicy,
    forward,
    gradient,
    train,
    save_checkpoint,
    load_checkpoint,
    Dataset,
    IlConfig,
    IlRun,
    TaskSpec,
    collect_demonstration,
    run_il,
    # Simulation and evaluation
    QuadParams,
    DisturbanceSpec,
    ReferenceTrajectory,
    ReferenceDistribution,
    Episode,
    make_reference,
    sample_reference,
    rollout,
    ExperimentResult,
    ComparisonTable,
    stage_cost,
    success_rate,
    expert_gap,
    covariate_shift_gap,
    evaluate_policy,
    measure_latency,
    run_comparison,
    # Config / export
    RunConfig,
    load_config,
    config_hash,
    save,
    SUPPORTED_FORMATS,
    save_tube_artifact,
    load_tube_artifact,
)

# Jobs module (public)
from . import jobs

__all__ = [
    "__version__",
    # Errors
    "InvalidParameterError",
    "InfeasibleTighteningError",
    "NonConvergenceError",
    "NumericError",
    "ExpertInfeasibleError",
    "SampleSizeError",
    "OutOfDistributionError",
    "CheckpointSchemaError",
    "ConfigError",
    # Control
    "BoxSet",
    "LtiModel",
    "CostWeights",
    "linearize_quadrotor_hover",
    "disturbance_box",
    "tighten_state_box",
    "tighten_input_box",
    "LqrSolution",
    "solve_dare",
    "lqr_weights",
    "TubeApprox",
    "estimate_invariant_box",
    "QpProblem",
    "QpSettings",
    "QpSolution",
    "QpSolver",
    "solve_qp",
    "ReferenceWindow",
    "RtmpcExpert",
    "RtmpcSolution",
    "build_quadrotor_expert",
    "mpc_step",
    "rtmpc_step",
    # Learning
    "AugmentedPair",
    "sparse_samples",
    "dense_samples",
    "label_actions",
    "MlpPolicy",
    "forward",
    "gradient",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "Dataset",
    "IlConfig",
    "IlRun",
    "TaskSpec",
    "collect_demonstration",
    "run_il",
    # Simulation and evaluation
    "QuadParams",
    "DisturbanceSpec",
    "ReferenceTrajectory",
    "ReferenceDistribution",
    "Episode",
    "make_reference",
    "sample_reference",
    "rollout",
    "ExperimentResult",
    "ComparisonTable",
    "stage_cost",
    "success_rate",
    "expert_gap",
    "covariate_shift_gap",
    "evaluate_policy",
    "measure_latency",
    "run_comparison",
    # Config / export
    "RunConfig",
    "load_config",
    "config_hash",
    "save",
    "SUPPORTED_FORMATS",
    "save_tube_artifact",
    "load_tube_artifact",
    # Modules
    "jobs",
]
