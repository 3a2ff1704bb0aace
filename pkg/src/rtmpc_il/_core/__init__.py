#!/usr/bin/env python3
"""Internal core modules for rtmpc_il."""

from .errors import (
    CheckpointSchemaError,
    ConfigError,
    ExpertInfeasibleError,
    InfeasibleTighteningError,
    InvalidParameterError,
    NonConvergenceError,
    NumericError,
    OutOfDistributionError,
    SampleSizeError,
)
from .linmodel import (
    BoxSet,
    CostWeights,
    LtiModel,
    disturbance_box,
    linearize_quadrotor_hover,
    tighten_input_box,
    tighten_state_box,
)
from .riccati import LqrSolution, lqr_weights, solve_dare
from .tube import TubeApprox, estimate_invariant_box
from .qpsolver import QpProblem, QpSettings, QpSolution, QpSolver, solve_qp
from .rtmpc import (
    ReferenceWindow,
    RtmpcExpert,
    RtmpcSolution,
    build_quadrotor_expert,
    mpc_step,
    rtmpc_step,
)
from .augment import AugmentedPair, dense_samples, label_actions, sparse_samples
from .mlp import MlpPolicy, forward, gradient, load_checkpoint, save_checkpoint, train
from .quadsim import (
    DisturbanceSpec,
    Episode,
    QuadParams,
    ReferenceDistribution,
    ReferenceTrajectory,
    make_reference,
    rollout,
    sample_reference,
)
from .il import Dataset, IlConfig, IlRun, TaskSpec, collect_demonstration, run_il
from .evalbench import (
    ComparisonTable,
    ExperimentResult,
    covariate_shift_gap,
    evaluate_policy,
    expert_gap,
    measure_latency,
    run_comparison,
    stage_cost,
    success_rate,
)
from .config import RunConfig, config_hash, load_config
from .export import SUPPORTED_FORMATS, load_tube_artifact, save, save_tube_artifact

__all__ = [
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
    # Linear model and sets
    "BoxSet",
    "LtiModel",
    "CostWeights",
    "linearize_quadrotor_hover",
    "disturbance_box",
    "tighten_state_box",
    "tighten_input_box",
    # Riccati / tube
    "LqrSolution",
    "solve_dare",
    "lqr_weights",
    "TubeApprox",
    "estimate_invariant_box",
    # QP
    "QpProblem",
    "QpSettings",
    "QpSolution",
    "QpSolver",
    "solve_qp",
    # Expert
    "ReferenceWindow",
    "RtmpcExpert",
    "RtmpcSolution",
    "build_quadrotor_expert",
    "mpc_step",
    "rtmpc_step",
    # Augmentation
    "AugmentedPair",
    "sparse_samples",
    "dense_samples",
    "label_actions",
    # Policy
    "MlpPolicy",
    "forward",
    "gradient",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    # Simulator
    "QuadParams",
    "DisturbanceSpec",
    "ReferenceTrajectory",
    "ReferenceDistribution",
    "Episode",
    "make_reference",
    "sample_reference",
    "rollout",
    # Imitation learning
    "Dataset",
    "IlConfig",
    "IlRun",
    "TaskSpec",
    "collect_demonstration",
    "run_il",
    # Evaluation
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
]
