"""Run configuration.

A run is described by one YAML file with nested sections; anything left
out takes the default below. Resolution order for the file:

1. explicit path (``--config``)
2. ``./rtmpc-il.yaml``
3. ``$RTMPC_IL_CONFIG``
4. built-in defaults only

``section.key=value`` overrides (``--set``) are applied last; values are
parsed as YAML, so ``il.hidden=[64, 64]`` and ``eval.methods=[bc+none]``
work as expected.
"""

import dataclasses as _dc
import hashlib as _hashlib
import json as _json
import os as _os
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from pathlib import Path as _Path
from typing import List, Optional, Sequence, Union

import yaml as _yaml

from .errors import ConfigError, InvalidParameterError
from .il import AUGMENTATIONS, METHODS, IlConfig, TaskSpec
from .paths import RunLayout, output_root
from .quadsim import QuadParams, ReferenceDistribution
from .rtmpc import DEFAULT_Q_DIAG, DEFAULT_R_DIAG

__all__ = [
    "RunConfig",
    "ModelSection",
    "CostSection",
    "DisturbanceSection",
    "TubeSection",
    "ReferenceSection",
    "IlSection",
    "EvalSection",
    "DEFAULT_CONFIG_NAME",
    "DEFAULT_METHODS",
    "resolve_config_path",
    "load_config",
    "apply_override",
    "config_hash",
]

DEFAULT_CONFIG_NAME = "rtmpc-il.yaml"

DEFAULT_METHODS = [f"{m}+{a}" for m in METHODS for a in AUGMENTATIONS]


@_dataclass
class ModelSection:
    mass: float = 1.0
    gravity: float = 9.81
    tau: float = 0.15
    drag: float = 0.1
    tilt_limit: float = 1.0
    thrust_min_fraction: float = 0.0
    thrust_max_fraction: float = 2.0
    space_half_width: float = 5.0
    altitude_min: float = 0.2
    altitude_max: float = 4.0
    velocity_limit: float = 4.0
    dt: float = 0.1
    horizon: int = 30

    def quad_params(self) -> QuadParams:
        fields = {f.name for f in _dc.fields(QuadParams)}
        return QuadParams(**{k: v for k, v in _dc.asdict(self).items() if k in fields})


@_dataclass
class CostSection:
    q_diag: List[float] = _field(default_factory=lambda: list(DEFAULT_Q_DIAG))
    r_diag: List[float] = _field(default_factory=lambda: list(DEFAULT_R_DIAG))


@_dataclass
class DisturbanceSection:
    task: str = "T1"
    w_fraction: float = 0.3
    eval_drag: float = 0.3
    adversarial_band: float = 0.05


@_dataclass
class TubeSection:
    n_rollouts: int = 10000
    horizon: int = 200
    seed: int = 0


@_dataclass
class ReferenceSection:
    kind: str = "lemniscate"
    radius: float = 1.5
    speed: float = 1.5
    center: List[float] = _field(default_factory=lambda: [0.0, 0.0, 1.5])
    duration: float = 7.0


@_dataclass
class IlSection:
    method: str = "bc"
    augmentation: str = "sa_sparse"
    beta_schedule: Optional[List[float]] = None
    epochs: int = 50
    lr: float = 0.001
    batch_size: int = 64
    n_demos: int = 1
    seed: Optional[int] = None
    hidden: List[int] = _field(default_factory=lambda: [32, 32])


@_dataclass
class EvalSection:
    seeds: int = 5
    episodes: int = 10
    demo_max: int = 10
    methods: List[str] = _field(default_factory=lambda: list(DEFAULT_METHODS))
    domains: List[str] = _field(default_factory=lambda: ["source", "target"])
    position_spread: float = 0.1
    velocity_spread: float = 0.1
    multi_trajectory: bool = False


_SECTIONS = {
    "model": ModelSection,
    "cost": CostSection,
    "disturbance": DisturbanceSection,
    "tube": TubeSection,
    "reference": ReferenceSection,
    "il": IlSection,
    "eval": EvalSection,
}
_SCALARS = ("output_dir", "master_seed", "workers")

# Keys that change where and how fast a run happens, never its results.
_UNHASHED = ("output_dir", "workers")


@_dataclass
class RunConfig:
    """Fully resolved configuration of one command."""

    model: ModelSection = _field(default_factory=ModelSection)
    cost: CostSection = _field(default_factory=CostSection)
    disturbance: DisturbanceSection = _field(default_factory=DisturbanceSection)
    tube: TubeSection = _field(default_factory=TubeSection)
    reference: ReferenceSection = _field(default_factory=ReferenceSection)
    il: IlSection = _field(default_factory=IlSection)
    eval: EvalSection = _field(default_factory=EvalSection)
    output_dir: Optional[str] = None
    master_seed: int = 0
    workers: Optional[int] = None

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return _dc.asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "RunConfig":
        """Build from nested dicts; unknown sections or keys raise ConfigError."""
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("Config file must contain a mapping at the top level")
        unknown = set(data) - set(_SECTIONS) - set(_SCALARS)
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        kwargs = {k: data[k] for k in _SCALARS if k in data}
        for name, section_cls in _SECTIONS.items():
            values = data.get(name) or {}
            if not isinstance(values, dict):
                raise ConfigError(f"Section '{name}' must be a mapping")
            known = {f.name for f in _dc.fields(section_cls)}
            bad = set(values) - known
            if bad:
                raise ConfigError(f"Unknown keys in section '{name}': {sorted(bad)}")
            kwargs[name] = section_cls(**values)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_yaml(self) -> str:
        return _yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    # -- derived objects -----------------------------------------------------

    def validate(self) -> None:
        """Build every derived object once so bad values fail early."""
        try:
            self.to_task()
            self.method_configs()
            self.to_il_config()
        except (InvalidParameterError, TypeError) as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
        if self.il.n_demos < 1 or self.eval.demo_max < 1:
            raise ConfigError("il.n_demos and eval.demo_max must be >= 1")
        if self.eval.seeds < 1 or self.eval.episodes < 1:
            raise ConfigError("eval.seeds and eval.episodes must be >= 1")
        bad = set(self.eval.domains) - {"source", "target"}
        if bad or not self.eval.domains:
            raise ConfigError(f"eval.domains must be a nonempty subset of source/target, got {self.eval.domains}")
        if self.workers is not None and int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def il_seed(self) -> int:
        return self.master_seed if self.il.seed is None else int(self.il.seed)

    def to_task(self) -> TaskSpec:
        distribution = None
        if self.eval.multi_trajectory:
            distribution = ReferenceDistribution(duration=self.reference.duration)
        return TaskSpec(
            name=self.disturbance.task,
            params=self.model.quad_params(),
            dt=self.model.dt,
            horizon=int(self.model.horizon),
            q_diag=tuple(self.cost.q_diag),
            r_diag=tuple(self.cost.r_diag),
            w_fraction=self.disturbance.w_fraction,
            adversarial_band=self.disturbance.adversarial_band,
            eval_drag=self.disturbance.eval_drag,
            reference_kind=self.reference.kind,
            radius=self.reference.radius,
            speed=self.reference.speed,
            center=tuple(self.reference.center),
            duration=self.reference.duration,
            distribution=distribution,
            position_spread=self.eval.position_spread,
            velocity_spread=self.eval.velocity_spread,
            tube_rollouts=int(self.tube.n_rollouts),
            tube_horizon=int(self.tube.horizon),
            tube_seed=int(self.tube.seed),
        )

    def _il_kwargs(self) -> dict:
        return {
            "beta_schedule": self.il.beta_schedule,
            "epochs": int(self.il.epochs),
            "lr": float(self.il.lr),
            "batch_size": int(self.il.batch_size),
            "seed": self.il_seed,
            "hidden": tuple(self.il.hidden),
        }

    def to_il_config(self) -> IlConfig:
        return IlConfig(method=self.il.method, augmentation=self.il.augmentation, **self._il_kwargs())

    def method_configs(self, names: Optional[Sequence[str]] = None) -> List[IlConfig]:
        """IlConfig per ``method+augmentation`` name, sharing the il section's training settings."""
        names = list(self.eval.methods if names is None else names)
        if not names:
            raise ConfigError("No methods given")
        return [IlConfig.parse(name, **self._il_kwargs()) for name in names]

    def worker_count(self) -> int:
        """``workers``, else ``$RTMPC_IL_WORKERS``, else the CPU count."""
        if self.workers is not None:
            return int(self.workers)
        env = _os.environ.get("RTMPC_IL_WORKERS")
        if env:
            try:
                return max(1, int(env))
            except ValueError as e:
                raise ConfigError(f"RTMPC_IL_WORKERS must be an integer, got {env!r}") from e
        return max(1, _os.cpu_count() or 1)

    def layout(self) -> RunLayout:
        """Run directory: ``output_dir`` or ``<output root>/<task>-<hash>``."""
        if self.output_dir:
            return RunLayout(self.output_dir)
        return RunLayout(output_root() / f"{self.disturbance.task}-{config_hash(self)[:10]}")

    def write_resolved(self, layout: RunLayout) -> _Path:
        """Echo the resolved config into the run directory."""
        layout.ensure()
        layout.config_echo.write_text(self.to_yaml(), encoding="utf-8")
        return layout.config_echo


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON of everything that affects results."""
    data = cfg.to_dict()
    for key in _UNHASHED:
        data.pop(key, None)
    canonical = _json.dumps(data, sort_keys=True, separators=(",", ":"))
    return _hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def resolve_config_path(explicit: Optional[Union[str, _Path]] = None) -> Optional[_Path]:
    """Locate the config file; None means defaults only.

    Raises:
        ConfigError: an explicitly named file (flag or env var) is missing
    """
    if explicit:
        path = _Path(explicit).expanduser()
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        return path
    local = _Path.cwd() / DEFAULT_CONFIG_NAME
    if local.is_file():
        return local
    env = _os.environ.get("RTMPC_IL_CONFIG")
    if env:
        path = _Path(env).expanduser()
        if not path.is_file():
            raise ConfigError(f"RTMPC_IL_CONFIG points to a missing file: {path}")
        return path
    return None


def apply_override(data: dict, assignment: str) -> dict:
    """Apply one ``section.key=value`` (or ``key=value``) assignment in place."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override must look like section.key=value, got {assignment!r}")
    try:
        value = _yaml.safe_load(raw) if raw.strip() else None
    except _yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse value in {assignment!r}: {e}") from e
    parts = key.strip().split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"'{part}' is not a section in {assignment!r}")
        node = child
    node[parts[-1]] = value
    return data


def load_config(
    path: Optional[Union[str, _Path]] = None,
    overrides: Sequence[str] = (),
    **scalars,
) -> RunConfig:
    """Resolve the config file, apply overrides and validate.

    Args:
        path: Explicit config file
        overrides: ``section.key=value`` assignments
        **scalars: Top-level values that win over everything
            (``output_dir``, ``master_seed``, ``workers``); None is ignored

    Raises:
        ConfigError: missing file, bad YAML, unknown keys or invalid values
    """
    resolved = resolve_config_path(path)
    data: dict = {}
    if resolved is not None:
        try:
            data = _yaml.safe_load(resolved.read_text(encoding="utf-8")) or {}
        except _yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse {resolved}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{resolved} must contain a mapping at the top level")
    for assignment in overrides:
        apply_override(data, assignment)
    for key, value in scalars.items():
        if key not in _SCALARS:
            raise ConfigError(f"Unknown top-level setting '{key}'")
        if value is not None:
            data[key] = value
    return RunConfig.from_dict(data)


# EOF
