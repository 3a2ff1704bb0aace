"""Nonlinear quadrotor point-mass simulator.

Translational dynamics with thrust rotated by (roll, pitch), linear drag and
an additive force disturbance; tilt follows a first-order lag toward the
commanded tilt. Yaw is fixed at zero.

Also provides reference trajectory generators and closed-loop rollouts
producing :class:`Episode` records.
"""

from __future__ import annotations

import logging
import math as _math
from dataclasses import asdict as _asdict
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from dataclasses import replace as _replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as _np

from .errors import ExpertInfeasibleError, InvalidParameterError, OutOfDistributionError
from .linmodel import INPUT_NAMES, STATE_NAMES, BoxSet, CostWeights
from .rtmpc import DEFAULT_Q_DIAG, DEFAULT_R_DIAG, ReferenceWindow

logger = logging.getLogger(__name__)

__all__ = [
    "QuadParams",
    "DisturbanceSpec",
    "DISTURBANCE_MODES",
    "ReferenceTrajectory",
    "ReferenceDistribution",
    "REFERENCE_KINDS",
    "Episode",
    "Controller",
    "vector_field",
    "step",
    "make_reference",
    "sample_reference",
    "sample_initial_state",
    "rollout",
]

DISTURBANCE_MODES = ("none", "uniform_random", "adversarial_constant", "drag_mismatch")
REFERENCE_KINDS = ("lemniscate", "circle", "step")
DEFAULT_CENTER = (0.0, 0.0, 1.5)

Controller = Callable[[_np.ndarray, ReferenceWindow], _np.ndarray]


@_dataclass(frozen=True)
class QuadParams:
    """Vehicle and flight-space parameters.

    Attributes:
        mass: Vehicle mass (kg)
        gravity: Gravitational acceleration (m/s^2)
        tau: Tilt time constant (s)
        drag: Linear drag coefficient per axis (1/s)
        tilt_limit: Symmetric roll/pitch limit (rad)
        thrust_min_fraction: Lower thrust limit as a fraction of weight
        thrust_max_fraction: Upper thrust limit as a fraction of weight
        space_half_width: Horizontal flight-space half width (m)
        altitude_min: Lowest admissible altitude (m)
        altitude_max: Highest admissible altitude (m)
        velocity_limit: Per-axis velocity limit (m/s)
    """

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

    def __post_init__(self):
        positive = (
            "mass",
            "gravity",
            "tau",
            "tilt_limit",
            "thrust_max_fraction",
            "space_half_width",
            "velocity_limit",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.drag < 0:
            raise InvalidParameterError(f"drag must be >= 0, got {self.drag}")
        if not 0 <= self.thrust_min_fraction <= self.thrust_max_fraction:
            raise InvalidParameterError("thrust limits must satisfy 0 <= min <= max")
        if not self.altitude_min < self.altitude_max:
            raise InvalidParameterError("altitude_min must be below altitude_max")

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    @property
    def hover_input(self) -> _np.ndarray:
        return _np.array([self.weight, 0.0, 0.0])

    def state_box(self) -> BoxSet:
        """State constraint set X."""
        h, v, t = self.space_half_width, self.velocity_limit, self.tilt_limit
        return BoxSet(
            [-h, -h, self.altitude_min, -v, -v, -v, -t, -t],
            [h, h, self.altitude_max, v, v, v, t, t],
        )

    def input_box(self) -> BoxSet:
        """Input constraint set U (thrust in newtons, tilt commands in rad)."""
        t = self.tilt_limit
        return BoxSet(
            [self.thrust_min_fraction * self.weight, -t, -t],
            [self.thrust_max_fraction * self.weight, t, t],
        )

    def with_drag(self, drag: float) -> "QuadParams":
        return _replace(self, drag=drag)

    def to_dict(self) -> dict:
        return _asdict(self)


@_dataclass(frozen=True)
class DisturbanceSpec:
    """Disturbance model of a rollout.

    Modes:
        none: no disturbance
        uniform_random: i.i.d. force per step, uniform in the box
            ``+-magnitude_fraction * weight`` per axis
        adversarial_constant: constant force per episode with magnitude in
            ``[magnitude_fraction - band, magnitude_fraction] * weight`` and a
            horizontal-dominant direction (elevation within +-30 deg)
        drag_mismatch: no force; the plant drag is replaced by ``eval_drag``
    """

    mode: str = "none"
    magnitude_fraction: float = 0.0
    seed: int = 0
    eval_drag: float = 0.3
    band: float = 0.05

    def __post_init__(self):
        if self.mode not in DISTURBANCE_MODES:
            raise InvalidParameterError(
                f"Unknown disturbance mode '{self.mode}'. Valid: {DISTURBANCE_MODES}"
            )
        if not 0.0 <= self.magnitude_fraction <= 0.3:
            raise InvalidParameterError(
                f"magnitude_fraction must lie in [0, 0.3], got {self.magnitude_fraction}"
            )
        if self.eval_drag < 0 or self.band < 0:
            raise InvalidParameterError("eval_drag and band must be >= 0")

    def plant_drag(self, params: QuadParams) -> float:
        return self.eval_drag if self.mode == "drag_mismatch" else params.drag

    def draw_forces(
        self, params: QuadParams, n_steps: int, rng: _np.random.Generator
    ) -> _np.ndarray:
        """Force sequence of shape (n_steps, 3) in newtons."""
        bound = self.magnitude_fraction * params.weight
        if self.mode == "uniform_random":
            return rng.uniform(-bound, bound, size=(n_steps, 3))
        if self.mode == "adversarial_constant":
            low = max(0.0, self.magnitude_fraction - self.band) * params.weight
            magnitude = rng.uniform(low, bound)
            azimuth = rng.uniform(0.0, 2.0 * _math.pi)
            elevation = rng.uniform(-_math.pi / 6.0, _math.pi / 6.0)
            direction = _np.array(
                [
                    _math.cos(elevation) * _math.cos(azimuth),
                    _math.cos(elevation) * _math.sin(azimuth),
                    _math.sin(elevation),
                ]
            )
            return _np.tile(magnitude * direction, (n_steps, 1))
        return _np.zeros((n_steps, 3))

    def to_dict(self) -> dict:
        return _asdict(self)


def vector_field(
    state, action, w, params: QuadParams, drag: Optional[float] = None
) -> _np.ndarray:
    """Continuous-time state derivative (no saturation applied)."""
    x = _np.asarray(state, dtype=float)
    u = _np.asarray(action, dtype=float)
    c_d = params.drag if drag is None else drag
    roll, pitch = x[6], x[7]
    thrust_acc = u[0] / params.mass
    acc = thrust_acc * _np.array(
        [
            _math.cos(roll) * _math.sin(pitch),
            -_math.sin(roll),
            _math.cos(roll) * _math.cos(pitch),
        ]
    )
    acc[2] -= params.gravity
    acc += -c_d * x[3:6] + _np.asarray(w, dtype=float) / params.mass

    dx = _np.empty(8)
    dx[0:3] = x[3:6]
    dx[3:6] = acc
    dx[6:8] = (u[1:3] - x[6:8]) / params.tau
    return dx


def step(
    state,
    action,
    w,
    params: QuadParams,
    dt: float,
    drag: Optional[float] = None,
) -> _np.ndarray:
    """Advance one RK4 step with a zero-order-hold action and force.

    The action is saturated to the input box before integration.
    """
    u = params.input_box().clip(action)
    x = _np.asarray(state, dtype=float)
    k1 = vector_field(x, u, w, params, drag)
    k2 = vector_field(x + 0.5 * dt * k1, u, w, params, drag)
    k3 = vector_field(x + 0.5 * dt * k2, u, w, params, drag)
    k4 = vector_field(x + dt * k3, u, w, params, drag)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# Reference trajectories
# ---------------------------------------------------------------------------


@_dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """Sampled position/velocity reference.

    Attributes:
        kind: One of ``lemniscate``, ``circle``, ``step``
        positions: (T+1, 3) positions
        velocities: (T+1, 3) analytic velocities
        dt: Sample spacing (s)
        start_position: Suggested initial vehicle position
        params: Generator parameters (radius, speed, center, duration)
    """

    kind: str
    positions: _np.ndarray
    velocities: _np.ndarray
    dt: float
    start_position: _np.ndarray
    params: dict = _field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return int(self.positions.shape[0]) - 1

    def window(self, t: int, horizon: int) -> ReferenceWindow:
        """``horizon + 1`` points from step ``t``, holding the final point."""
        idx = _np.minimum(_np.arange(t, t + horizon + 1), self.n_steps)
        return ReferenceWindow(self.positions[idx], self.velocities[idx])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dt": self.dt,
            "params": self.params,
            "n_steps": self.n_steps,
        }


def _check_in_space(positions: _np.ndarray, params: QuadParams, what: str) -> None:
    box = params.state_box()
    lo, hi = box.lower[0:3], box.upper[0:3]
    if _np.any(positions < lo) or _np.any(positions > hi):
        raise OutOfDistributionError(f"{what} leaves the flight space {lo.tolist()}..{hi.tolist()}")


def make_reference(
    kind: str,
    radius: float = 1.0,
    speed: float = 1.0,
    center: Sequence[float] = DEFAULT_CENTER,
    duration: float = 7.0,
    dt: float = 0.1,
    params: Optional[QuadParams] = None,
) -> ReferenceTrajectory:
    """Generate a reference trajectory.

    Args:
        kind: ``lemniscate`` (figure-eight of Gerono), ``circle`` or ``step``
        radius: Half width of the lemniscate, circle radius, or step distance
            along +x (m)
        speed: Peak speed for lemniscate and circle (m/s); unused for step
        center: Trajectory center (m)
        duration: Length in seconds; must be an integer multiple of dt
        dt: Sample spacing (s)
        params: Flight envelope used for bounds checks

    Returns:
        ReferenceTrajectory with ``duration / dt + 1`` samples

    Raises:
        OutOfDistributionError: Unknown kind or parameters outside bounds
    """
    params = params or QuadParams()
    if kind not in REFERENCE_KINDS:
        raise OutOfDistributionError(f"Unknown reference kind '{kind}'. Valid: {REFERENCE_KINDS}")
    if not dt > 0 or not duration > 0:
        raise OutOfDistributionError("duration and dt must be positive")
    n_steps = int(round(duration / dt))
    if abs(n_steps * dt - duration) > 1e-9 * max(1.0, duration):
        raise OutOfDistributionError(f"duration {duration} is not a multiple of dt {dt}")
    if radius < 0 or (kind != "step" and radius == 0):
        raise OutOfDistributionError(f"radius must be positive, got {radius}")
    if kind != "step" and not 0 < speed <= params.velocity_limit:
        raise OutOfDistributionError(
            f"speed must lie in (0, {params.velocity_limit}], got {speed}"
        )

    c = _np.asarray(center, dtype=float).reshape(3)
    t = _np.arange(n_steps + 1) * dt
    pos = _np.tile(c, (n_steps + 1, 1))
    vel = _np.zeros((n_steps + 1, 3))

    if kind == "circle":
        omega = speed / radius
        s = omega * t
        pos[:, 0] += radius * _np.cos(s)
        pos[:, 1] += radius * _np.sin(s)
        vel[:, 0] = -radius * omega * _np.sin(s)
        vel[:, 1] = radius * omega * _np.cos(s)
        start = pos[0].copy()
    elif kind == "lemniscate":
        # x = a cos s, y = a sin s cos s; peak speed sqrt(2) a omega at s = pi/2
        omega = speed / (radius * _math.sqrt(2.0))
        s = omega * t
        pos[:, 0] += radius * _np.cos(s)
        pos[:, 1] += radius * _np.sin(s) * _np.cos(s)
        vel[:, 0] = -radius * omega * _np.sin(s)
        vel[:, 1] = radius * omega * _np.cos(2.0 * s)
        start = pos[0].copy()
    else:
        pos[:, 0] += radius
        start = c.copy()

    _check_in_space(pos, params, f"{kind} reference")
    _check_in_space(start[None, :], params, "reference start")
    pos.setflags(write=False)
    vel.setflags(write=False)
    return ReferenceTrajectory(
        kind=kind,
        positions=pos,
        velocities=vel,
        dt=dt,
        start_position=start,
        params={
            "radius": float(radius),
            "speed": float(speed),
            "center": c.tolist(),
            "duration": float(duration),
        },
    )


@_dataclass(frozen=True)
class ReferenceDistribution:
    """Sampling ranges for the multi-trajectory task."""

    kinds: Tuple[str, ...] = REFERENCE_KINDS
    radius_range: Tuple[float, float] = (1.0, 2.0)
    speed_range: Tuple[float, float] = (0.5, 2.0)
    center_offset: float = 0.5
    altitude_range: Tuple[float, float] = (1.0, 2.0)
    duration: float = 7.0

    def __post_init__(self):
        unknown = set(self.kinds) - set(REFERENCE_KINDS)
        if not self.kinds or unknown:
            raise InvalidParameterError(f"Invalid reference kinds: {self.kinds}")
        for name in ("radius_range", "speed_range", "altitude_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidParameterError(f"{name} must be (low, high), got {(lo, hi)}")


def sample_reference(
    rng: _np.random.Generator,
    dist: ReferenceDistribution,
    dt: float = 0.1,
    params: Optional[QuadParams] = None,
) -> ReferenceTrajectory:
    """Draw one reference from a :class:`ReferenceDistribution`."""
    kind = dist.kinds[int(rng.integers(len(dist.kinds)))]
    radius = rng.uniform(*dist.radius_range)
    speed = rng.uniform(*dist.speed_range)
    offset = rng.uniform(-dist.center_offset, dist.center_offset, size=2)
    altitude = rng.uniform(*dist.altitude_range)
    return make_reference(
        kind,
        radius=radius,
        speed=speed,
        center=(offset[0], offset[1], altitude),
        duration=dist.duration,
        dt=dt,
        params=params,
    )


def sample_initial_state(
    reference: ReferenceTrajectory,
    rng: Optional[_np.random.Generator] = None,
    position_spread: float = 0.0,
    velocity_spread: float = 0.0,
) -> _np.ndarray:
    """Initial state around the reference start, zero tilt."""
    x0 = _np.zeros(8)
    x0[0:3] = reference.start_position
    if reference.kind != "step":
        x0[3:6] = reference.velocities[0]
    if rng is not None and (position_spread > 0 or velocity_spread > 0):
        x0[0:3] += rng.uniform(-position_spread, position_spread, size=3)
        x0[3:6] += rng.uniform(-velocity_spread, velocity_spread, size=3)
    return x0


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------


@_dataclass
class Episode:
    """One closed-loop rollout.

    Attributes:
        states: (T+1, 8) visited states, the last one after the final action
        actions: (T, 3) executed actions
        references: (T, 6) reference position/velocity at each step
        windows: Reference windows fed to the controller
        disturbances: (T, 3) applied force per step
        stage_costs: (T,) per-step tracking cost
        violated: True iff a state constraint was violated or the expert
            became infeasible
        failure_reason: Short description when the episode ended early
        dt: Step length (s)
        u_trim: Input the stage cost measures deviations from
    """

    states: _np.ndarray
    actions: _np.ndarray
    references: _np.ndarray
    windows: List[ReferenceWindow]
    disturbances: _np.ndarray
    stage_costs: _np.ndarray
    violated: bool
    failure_reason: Optional[str] = None
    dt: float = 0.1
    u_trim: _np.ndarray = _field(default_factory=lambda: _np.zeros(3))

    @property
    def n_steps(self) -> int:
        return int(self.actions.shape[0])

    @property
    def success(self) -> bool:
        return not self.violated

    @property
    def total_cost(self) -> float:
        return float(self.stage_costs.sum())

    def rows(self) -> List[dict]:
        """One dict per step for CSV export."""
        out = []
        for t in range(self.n_steps):
            row = {"t": round(t * self.dt, 10)}
            row.update({name: self.states[t, i] for i, name in enumerate(STATE_NAMES)})
            row.update({name: self.actions[t, i] for i, name in enumerate(INPUT_NAMES)})
            for i, axis in enumerate(("x", "y", "z")):
                row[f"ref_p{axis}"] = self.references[t, i]
            for i, axis in enumerate(("x", "y", "z")):
                row[f"ref_v{axis}"] = self.references[t, 3 + i]
            for i, axis in enumerate(("x", "y", "z")):
                row[f"w{axis}"] = self.disturbances[t, i]
            row["stage_cost"] = self.stage_costs[t]
            out.append(row)
        return out

    def summary(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "violated": self.violated,
            "failure_reason": self.failure_reason,
            "total_cost": self.total_cost,
        }


def rollout(
    controller: Controller,
    reference: ReferenceTrajectory,
    disturbance: DisturbanceSpec,
    params: QuadParams,
    seed: int,
    weights: Optional[CostWeights] = None,
    horizon: int = 30,
    initial_state: Optional[_np.ndarray] = None,
    on_step: Optional[Callable[[int, _np.ndarray, ReferenceWindow, _np.ndarray], None]] = None,
) -> Episode:
    """Run ``controller`` along ``reference`` on the nonlinear plant.

    The controller sees the state and an ``horizon``-step reference window
    and returns an absolute action. The episode stops at the first state
    constraint violation or expert infeasibility.

    Args:
        controller: ``(state, window) -> action`` callable; its ``reset()``
            is called first when present
        reference: Trajectory to track; its dt is the simulation step
        disturbance: Disturbance model
        params: Plant parameters (constraints and nominal drag)
        seed: Seed of the disturbance stream
        weights: Stage-cost weights (defaults to the expert defaults)
        horizon: Window length passed to the controller
        initial_state: Start state; defaults to the reference start
        on_step: Callback ``(t, state, window, executed_action)``

    Returns:
        Episode
    """
    if weights is None:
        weights = CostWeights.from_diagonals(DEFAULT_Q_DIAG, DEFAULT_R_DIAG)
    if hasattr(controller, "reset"):
        controller.reset()

    dt = reference.dt
    X = params.state_box()
    u_trim = params.hover_input
    drag = disturbance.plant_drag(params)
    n_total = reference.n_steps
    rng = _np.random.default_rng([int(disturbance.seed), int(seed)])
    forces = disturbance.draw_forces(params, n_total, rng)

    x = sample_initial_state(reference) if initial_state is None else _np.array(initial_state, dtype=float)
    states = [x.copy()]
    actions, refs, windows, costs, applied = [], [], [], [], []
    violated = not X.contains(x)
    reason = "initial state outside constraints" if violated else None

    for t in range(n_total):
        if violated:
            break
        window = reference.window(t, horizon)
        try:
            u = _np.asarray(controller(x, window), dtype=float)
        except ExpertInfeasibleError as e:
            violated, reason = True, f"expert infeasible at step {t}: {e}"
            logger.info(reason)
            break
        if u.shape != (3,) or not _np.all(_np.isfinite(u)):
            violated, reason = True, f"non-finite action at step {t}"
            break

        target = _np.concatenate([window.positions[0], window.velocities[0]])
        e = x.copy()
        e[0:6] -= target
        du = u - u_trim
        costs.append(float(e @ weights.Q @ e + du @ weights.R @ du))
        actions.append(u)
        refs.append(target)
        windows.append(window)
        applied.append(forces[t])
        if on_step is not None:
            on_step(t, x, window, u)

        x = step(x, u, forces[t], params, dt, drag=drag)
        states.append(x.copy())
        if not _np.all(_np.isfinite(x)) or not X.contains(x):
            violated = True
            reason = f"state constraint violated at step {t + 1}"

    return Episode(
        states=_np.array(states),
        actions=_np.array(actions).reshape(-1, 3),
        references=_np.array(refs).reshape(-1, 6),
        windows=windows,
        disturbances=_np.array(applied).reshape(-1, 3),
        stage_costs=_np.array(costs, dtype=float),
        violated=violated,
        failure_reason=reason,
        dt=dt,
        u_trim=u_trim,
    )


# EOF
