"""Imitation-learning orchestration.

Demonstration collection with a beta-mixture of expert and learner,
behavior cloning, DAgger, domain randomization and tube sampling
augmentation, with dataset aggregation and retraining from scratch.
"""

import logging
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from dataclasses import replace as _replace
from typing import Callable, List, Optional, Tuple

import numpy as _np

from .augment import label_actions, tube_samples
from .errors import InvalidParameterError
from .linmodel import INPUT_NAMES, STATE_NAMES
from .mlp import MlpPolicy, feature_vector, train
from .quadsim import (
    DisturbanceSpec,
    Episode,
    QuadParams,
    ReferenceDistribution,
    ReferenceTrajectory,
    make_reference,
    rollout,
    sample_initial_state,
    sample_reference,
)
from .rtmpc import (
    DEFAULT_HORIZON,
    DEFAULT_Q_DIAG,
    DEFAULT_R_DIAG,
    ReferenceWindow,
    RtmpcExpert,
    build_quadrotor_expert,
)

logger = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "AUGMENTATIONS",
    "PROVENANCE_TAGS",
    "TASKS",
    "Dataset",
    "IlConfig",
    "TaskSpec",
    "Demonstration",
    "IlRun",
    "derive_seed",
    "collect_demonstration",
    "run_il",
]

METHODS = ("bc", "dagger")
AUGMENTATIONS = ("none", "dr", "sa_sparse", "sa_dense")
PROVENANCE_TAGS = ("demo", "tube_sparse", "tube_dense")
TASKS = ("T1", "T2")


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for ``(seed, *keys)``."""
    return int(_np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)[0])


@_dataclass
class Dataset:
    """Aggregated training triples.

    Attributes:
        horizon: Window length N used for the policy features
        states: Visited or sampled states
        windows: Reference window at each entry
        actions: Expert (or ancillary) action labels
        provenance: ``demo``, ``tube_sparse`` or ``tube_dense`` per entry
        demo_index: Demonstration each entry came from
        source_step: Step within that demonstration
        demo_count: Demonstrations aggregated so far
    """

    horizon: int
    states: List[_np.ndarray] = _field(default_factory=list)
    windows: List[ReferenceWindow] = _field(default_factory=list)
    actions: List[_np.ndarray] = _field(default_factory=list)
    provenance: List[str] = _field(default_factory=list)
    demo_index: List[int] = _field(default_factory=list)
    source_step: List[int] = _field(default_factory=list)
    demo_count: int = 0

    def __len__(self) -> int:
        return len(self.actions)

    def add(
        self,
        state,
        window: ReferenceWindow,
        action,
        provenance: str = "demo",
        demo_index: int = 0,
        source_step: int = 0,
    ) -> None:
        action = _np.asarray(action, dtype=float).copy()
        if not _np.all(_np.isfinite(action)):
            raise InvalidParameterError("Dataset labels must be finite")
        if provenance not in PROVENANCE_TAGS:
            raise InvalidParameterError(f"Unknown provenance '{provenance}'")
        self.states.append(_np.asarray(state, dtype=float).copy())
        self.windows.append(window)
        self.actions.append(action)
        self.provenance.append(provenance)
        self.demo_index.append(int(demo_index))
        self.source_step.append(int(source_step))

    def extend(self, other: "Dataset") -> None:
        if other.horizon != self.horizon:
            raise InvalidParameterError("Cannot merge datasets with different horizons")
        self.states.extend(other.states)
        self.windows.extend(other.windows)
        self.actions.extend(other.actions)
        self.provenance.extend(other.provenance)
        self.demo_index.extend(other.demo_index)
        self.source_step.extend(other.source_step)

    def feature_matrix(self) -> _np.ndarray:
        if not self.states:
            return _np.zeros((0, 0))
        return _np.array(
            [feature_vector(s, w, self.horizon) for s, w in zip(self.states, self.windows)]
        )

    def action_matrix(self) -> _np.ndarray:
        return _np.array(self.actions).reshape(len(self.actions), -1)

    def counts(self) -> dict:
        return {tag: self.provenance.count(tag) for tag in PROVENANCE_TAGS}

    def summary(self) -> dict:
        return {"size": len(self), "demo_count": self.demo_count, **self.counts()}

    def rows(self) -> List[dict]:
        """One dict per entry for CSV export (state and label columns)."""
        out = []
        for i in range(len(self)):
            row = {
                "demo_index": self.demo_index[i],
                "source_step": self.source_step[i],
                "provenance": self.provenance[i],
            }
            state = self.states[i]
            names = STATE_NAMES if state.shape[0] == len(STATE_NAMES) else [f"x{j}" for j in range(state.shape[0])]
            row.update({n: state[j] for j, n in enumerate(names)})
            ref = self.windows[i]
            for j, axis in enumerate("xyz"[: ref.positions.shape[1]]):
                row[f"ref_p{axis}"] = ref.positions[0, j]
                row[f"ref_v{axis}"] = ref.velocities[0, j]
            label = self.actions[i]
            names = INPUT_NAMES if label.shape[0] == len(INPUT_NAMES) else [f"u{j}" for j in range(label.shape[0])]
            row.update({f"label_{n}": label[j] for j, n in enumerate(names)})
            out.append(row)
        return out


@_dataclass(frozen=True)
class IlConfig:
    """Learning method configuration.

    Attributes:
        method: ``bc`` or ``dagger``
        augmentation: ``none``, ``dr``, ``sa_sparse`` or ``sa_dense``
        beta_schedule: DAgger beta per demonstration index; the last value is
            held. Default: 1 for the first demonstration, 0 afterwards
        epochs: Training epochs per retrain
        lr: Adam learning rate
        batch_size: Minibatch size
        seed: Master seed of the run
        hidden: Hidden layer widths
    """

    method: str = "bc"
    augmentation: str = "none"
    beta_schedule: Optional[Tuple[float, ...]] = None
    epochs: int = 50
    lr: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    hidden: Tuple[int, ...] = (32, 32)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"Unknown method '{self.method}'. Valid: {METHODS}")
        if self.augmentation not in AUGMENTATIONS:
            raise InvalidParameterError(
                f"Unknown augmentation '{self.augmentation}'. Valid: {AUGMENTATIONS}"
            )
        if self.beta_schedule is not None:
            object.__setattr__(self, "beta_schedule", tuple(float(b) for b in self.beta_schedule))
            if not self.beta_schedule or any(not 0.0 <= b <= 1.0 for b in self.beta_schedule):
                raise InvalidParameterError("beta values must lie in [0, 1]")
        if self.epochs < 1:
            raise InvalidParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr < 0 or self.batch_size < 1:
            raise InvalidParameterError("lr must be >= 0 and batch_size >= 1")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @classmethod
    def parse(cls, name: str, **kwargs) -> "IlConfig":
        """Build from ``"<method>+<augmentation>"`` (augmentation optional)."""
        method, _, aug = name.strip().partition("+")
        return cls(method=method, augmentation=aug or "none", **kwargs)

    @property
    def name(self) -> str:
        return f"{self.method}+{self.augmentation}"

    @property
    def sampling(self) -> Optional[str]:
        return {"sa_sparse": "sparse", "sa_dense": "dense"}.get(self.augmentation)

    def beta(self, demo_index: int) -> float:
        if self.method == "bc":
            return 1.0
        if self.beta_schedule is None:
            return 1.0 if demo_index == 0 else 0.0
        return self.beta_schedule[min(demo_index, len(self.beta_schedule) - 1)]

    def with_seed(self, seed: int) -> "IlConfig":
        return _replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "augmentation": self.augmentation,
            "beta_schedule": None if self.beta_schedule is None else list(self.beta_schedule),
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "hidden": list(self.hidden),
        }


@_dataclass(frozen=True)
class TaskSpec:
    """Environment and reference setup shared by training and evaluation.

    ``T1`` evaluates under an adversarial constant force, ``T2`` under a
    drag mismatch. The source domain has no disturbance.
    """

    name: str = "T1"
    params: QuadParams = _field(default_factory=QuadParams)
    dt: float = 0.1
    horizon: int = DEFAULT_HORIZON
    q_diag: Tuple[float, ...] = DEFAULT_Q_DIAG
    r_diag: Tuple[float, ...] = DEFAULT_R_DIAG
    w_fraction: float = 0.3
    adversarial_band: float = 0.05
    eval_drag: float = 0.3
    reference_kind: str = "lemniscate"
    radius: float = 1.5
    speed: float = 1.5
    center: Tuple[float, float, float] = (0.0, 0.0, 1.5)
    duration: float = 7.0
    distribution: Optional[ReferenceDistribution] = None
    position_spread: float = 0.1
    velocity_spread: float = 0.1
    tube_rollouts: int = 10000
    tube_horizon: int = 200
    tube_seed: int = 0

    def __post_init__(self):
        if self.name not in TASKS:
            raise InvalidParameterError(f"Unknown task '{self.name}'. Valid: {TASKS}")
        if self.horizon < 1:
            raise InvalidParameterError("horizon must be >= 1")
        if not 0.0 <= self.w_fraction <= 0.3:
            raise InvalidParameterError(f"w_fraction must lie in [0, 0.3], got {self.w_fraction}")

    def build_expert(self, tube=None, lqr=None) -> RtmpcExpert:
        return build_quadrotor_expert(
            self.params,
            dt=self.dt,
            horizon=self.horizon,
            q_diag=self.q_diag,
            r_diag=self.r_diag,
            w_fraction=self.w_fraction,
            n_rollouts=self.tube_rollouts,
            tube_horizon=self.tube_horizon,
            tube_seed=self.tube_seed,
            tube=tube,
            lqr=lqr,
        )

    def reference(self, rng: _np.random.Generator) -> ReferenceTrajectory:
        if self.distribution is not None:
            return sample_reference(rng, self.distribution, dt=self.dt, params=self.params)
        return make_reference(
            self.reference_kind,
            radius=self.radius,
            speed=self.speed,
            center=self.center,
            duration=self.duration,
            dt=self.dt,
            params=self.params,
        )

    def initial_state(self, reference: ReferenceTrajectory, rng: _np.random.Generator) -> _np.ndarray:
        return sample_initial_state(reference, rng, self.position_spread, self.velocity_spread)

    def disturbance(self, domain: str, seed: int = 0) -> DisturbanceSpec:
        """Disturbance of ``source``, ``target`` or ``dr`` rollouts."""
        if domain == "source":
            return DisturbanceSpec("none", seed=seed)
        if domain == "dr":
            return DisturbanceSpec("uniform_random", self.w_fraction, seed=seed)
        if domain == "target":
            if self.name == "T2":
                return DisturbanceSpec("drag_mismatch", seed=seed, eval_drag=self.eval_drag)
            return DisturbanceSpec(
                "adversarial_constant", self.w_fraction, seed=seed, band=self.adversarial_band
            )
        raise InvalidParameterError(f"Unknown domain '{domain}'")

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "params": self.params.to_dict(),
            "dt": self.dt,
            "horizon": self.horizon,
            "q_diag": list(self.q_diag),
            "r_diag": list(self.r_diag),
            "w_fraction": self.w_fraction,
            "reference_kind": self.reference_kind,
            "radius": self.radius,
            "speed": self.speed,
            "center": list(self.center),
            "duration": self.duration,
            "multi_trajectory": self.distribution is not None,
        }
        return out


@_dataclass
class Demonstration:
    """One collection rollout and the entries it produced."""

    episode: Episode
    dataset: Dataset
    beta: float
    expert_steps: int
    aborted: bool

    @property
    def violated(self) -> bool:
        return self.episode.violated


def collect_demonstration(
    expert: RtmpcExpert,
    policy: Optional[MlpPolicy],
    beta: float,
    task: TaskSpec,
    reference: ReferenceTrajectory,
    seed: int,
    augmentation: str = "none",
    demo_index: int = 0,
    initial_state: Optional[_np.ndarray] = None,
) -> Demonstration:
    """Roll out the beta-mixture of expert and policy and record labels.

    At each step the executed action is the expert's with probability
    ``beta`` and the policy's otherwise. Every label, demo and tube sample
    alike, is the unsaturated ancillary law ``u_check0 + K (x - x_check0)``;
    only the executed expert action is saturated to U. Tube augmentation
    appends samples of ``x_check0 + Z``; ``dr`` perturbs the rollout with
    uniform draws from W.

    Raises:
        InvalidParameterError: beta outside [0, 1] or missing policy
    """
    if not 0.0 <= beta <= 1.0:
        raise InvalidParameterError(f"beta must lie in [0, 1], got {beta}")
    if beta < 1.0 and policy is None:
        raise InvalidParameterError("A policy is required when beta < 1")
    if augmentation not in AUGMENTATIONS:
        raise InvalidParameterError(f"Unknown augmentation '{augmentation}'")

    sampling = {"sa_sparse": "sparse", "sa_dense": "dense"}.get(augmentation)
    tag = {"sparse": "tube_sparse", "dense": "tube_dense"}.get(sampling)
    mix_rng = _np.random.default_rng(derive_seed(seed, 1))
    data = Dataset(horizon=expert.horizon)
    expert.reset()
    counter = {"step": 0, "expert": 0}

    def mixture(state, window):
        t = counter["step"]
        counter["step"] += 1
        sol = expert.solve(state, window)
        data.add(state, window, sol.u_ancillary, "demo", demo_index, t)
        if sampling is not None:
            samples = tube_samples(sampling, sol.x_check0, expert.tube.z_box)
            for pair in label_actions(samples, sol.u_check0, expert.K, sol.x_check0, t, U=expert.U):
                data.add(pair.state_plus, window, pair.action_plus, tag, demo_index, t)
        if mix_rng.random() < beta:
            counter["expert"] += 1
            return sol.u_exec
        return policy(state, window)

    domain = "dr" if augmentation == "dr" else "source"
    episode = rollout(
        mixture,
        reference,
        task.disturbance(domain),
        task.params,
        seed=seed,
        weights=expert.weights,
        horizon=expert.horizon,
        initial_state=initial_state,
    )
    aborted = bool(episode.failure_reason and episode.failure_reason.startswith("expert infeasible"))
    if aborted and beta == 1.0:
        logger.warning("Demonstration %d aborted: %s", demo_index, episode.failure_reason)
        data = Dataset(horizon=expert.horizon)
    logger.info(
        "Demonstration %d (beta=%.2f, %s): %d steps, %d entries%s",
        demo_index,
        beta,
        augmentation,
        episode.n_steps,
        len(data),
        ", constraint violated" if episode.violated else "",
    )
    return Demonstration(
        episode=episode,
        dataset=data,
        beta=beta,
        expert_steps=counter["expert"],
        aborted=aborted,
    )


@_dataclass
class IlRun:
    """Policies and bookkeeping of one :func:`run_il` call.

    ``policies[i]`` is the policy after ``i + 1`` demonstrations (None if no
    data was available yet).
    """

    config: IlConfig
    policies: List[Optional[MlpPolicy]]
    dataset: Dataset
    snapshots: List[dict]
    loss_traces: List[List[float]]
    demonstrations: List[dict]

    @property
    def collection_violations(self) -> int:
        return int(sum(d["violated"] for d in self.demonstrations))

    @property
    def final_policy(self) -> Optional[MlpPolicy]:
        return self.policies[-1] if self.policies else None


def run_il(
    config: IlConfig,
    n_demos: int,
    task: TaskSpec,
    expert: Optional[RtmpcExpert] = None,
    on_demo: Optional[Callable[[int, IlRun], None]] = None,
) -> IlRun:
    """Collect, aggregate and retrain for ``n_demos`` demonstrations.

    Each retrain starts from a freshly initialized network; standardization
    statistics come from the first demonstration and stay frozen.

    Args:
        config: Method, augmentation and training settings
        n_demos: Number of demonstrations (>= 1)
        task: Environment and reference setup
        expert: Prebuilt expert (built from ``task`` when omitted)
        on_demo: Callback after each demonstration

    Returns:
        IlRun
    """
    if n_demos < 1:
        raise InvalidParameterError(f"n_demos must be >= 1, got {n_demos}")
    expert = expert or task.build_expert()
    ref_rng = _np.random.default_rng(derive_seed(config.seed, 2))
    init_rng = _np.random.default_rng(derive_seed(config.seed, 3))

    dataset = Dataset(horizon=expert.horizon)
    run = IlRun(config, [], dataset, [], [], [])
    policy: Optional[MlpPolicy] = None
    normalization = None

    for i in range(n_demos):
        beta = config.beta(i)
        if policy is None:
            beta = 1.0
        reference = task.reference(ref_rng)
        x0 = task.initial_state(reference, init_rng)
        demo = collect_demonstration(
            expert,
            policy,
            beta,
            task,
            reference,
            seed=derive_seed(config.seed, 4, i),
            augmentation=config.augmentation,
            demo_index=i,
            initial_state=x0,
        )
        dataset.extend(demo.dataset)
        dataset.demo_count = i + 1
        run.demonstrations.append(
            {
                "demo_index": i,
                "beta": beta,
                "violated": demo.violated,
                "aborted": demo.aborted,
                "steps": demo.episode.n_steps,
                "entries": len(demo.dataset),
                "expert_steps": demo.expert_steps,
            }
        )

        if len(dataset):
            if normalization is None:
                stats = MlpPolicy.for_horizon(expert.horizon, config.hidden)
                stats.fit_normalization(dataset.feature_matrix(), dataset.action_matrix())
                normalization = stats.normalization()
            fresh = MlpPolicy.for_horizon(
                expert.horizon, config.hidden, nx=expert.model.nx, nu=expert.model.nu, seed=config.seed
            )
            fresh.set_normalization(*normalization)
            policy, losses = train(
                fresh,
                dataset,
                epochs=config.epochs,
                lr=config.lr,
                batch_size=config.batch_size,
                seed=derive_seed(config.seed, 5, i),
            )
            policy.metadata = {"method": config.name, "demos": i + 1, "dataset_size": len(dataset)}
        else:
            losses = []
        run.policies.append(policy)
        run.loss_traces.append(losses)
        run.snapshots.append(dataset.summary())
        if on_demo is not None:
            on_demo(i, run)
    return run


# EOF
