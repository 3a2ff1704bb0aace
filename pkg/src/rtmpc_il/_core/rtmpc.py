"""Trajectory-tracking MPC and its robust tube variant.

Both controllers solve the same stacked QP over
``[x_0 .. x_N, du_0 .. du_{N-1}]`` where ``du = u - u_trim``. The nominal
MPC pins ``x_0`` to the measured state; the robust variant lets ``x_0``
move inside ``x_t - Z`` and applies the ancillary law
``u = u_check0 + K (x_t - x_check0)``.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as _np

from .errors import ExpertInfeasibleError, InvalidParameterError
from .linmodel import (
    INPUT_NAMES,
    STATE_NAMES,
    BoxSet,
    CostWeights,
    LtiModel,
    disturbance_box,
    linearize_quadrotor_hover,
    tighten_input_box,
    tighten_state_box,
)
from .qpsolver import (
    STATUS_INFEASIBLE,
    STATUS_MAX_ITER,
    QpProblem,
    QpSettings,
    QpSolver,
)
from .riccati import LqrSolution, lqr_weights
from .tube import TubeApprox, estimate_invariant_box, zero_tube

if TYPE_CHECKING:
    from .quadsim import QuadParams

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_Q_DIAG",
    "DEFAULT_R_DIAG",
    "DEFAULT_HORIZON",
    "MULTI_TRAJECTORY_HORIZON",
    "ReferenceWindow",
    "RtmpcSolution",
    "RtmpcExpert",
    "mpc_step",
    "rtmpc_step",
    "build_quadrotor_expert",
]

DEFAULT_Q_DIAG = (10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 1.0, 1.0)
DEFAULT_R_DIAG = (0.1, 256.0, 256.0)
DEFAULT_HORIZON = 30
MULTI_TRAJECTORY_HORIZON = 20


@_dataclass(frozen=True, eq=False)
class ReferenceWindow:
    """``N + 1`` stacked position/velocity targets at stride dt.

    Targets for the remaining state coordinates (tilt) are zero.
    """

    positions: _np.ndarray
    velocities: _np.ndarray

    def __post_init__(self):
        pos = _np.atleast_2d(_np.asarray(self.positions, dtype=float))
        vel = _np.atleast_2d(_np.asarray(self.velocities, dtype=float))
        if pos.shape != vel.shape or pos.shape[0] < 2:
            raise InvalidParameterError(
                f"Window needs matching (N+1, d) arrays with N >= 1, got {pos.shape}, {vel.shape}"
            )
        if not (_np.all(_np.isfinite(pos)) and _np.all(_np.isfinite(vel))):
            raise InvalidParameterError("Reference window must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @classmethod
    def constant(cls, position, velocity, horizon: int) -> "ReferenceWindow":
        p = _np.atleast_1d(_np.asarray(position, dtype=float))
        v = _np.atleast_1d(_np.asarray(velocity, dtype=float))
        return cls(_np.tile(p, (horizon + 1, 1)), _np.tile(v, (horizon + 1, 1)))

    @property
    def horizon(self) -> int:
        return int(self.positions.shape[0]) - 1

    def state_targets(self, nx: int) -> _np.ndarray:
        """(N+1, nx) state targets ``[p, v, 0...]``."""
        pv = _np.hstack([self.positions, self.velocities])
        if pv.shape[1] > nx:
            raise InvalidParameterError(f"Window has {pv.shape[1]} targets, state only {nx}")
        return _np.hstack([pv, _np.zeros((pv.shape[0], nx - pv.shape[1]))])

    def features(self, n_points: Optional[int] = None) -> _np.ndarray:
        """First ``n_points`` (default N) targets flattened point by point."""
        n_points = self.horizon if n_points is None else n_points
        pv = _np.hstack([self.positions, self.velocities])
        return pv[:n_points].reshape(-1)


@_dataclass(eq=False)
class RtmpcSolution:
    """Outcome of one expert solve.

    Attributes:
        x_check0: Optimal nominal initial state
        u_check0: Feedforward action (absolute)
        u_ancillary: ``u_check0 + K (x_t - x_check0)``
        u_exec: Executed action, ``u_ancillary`` saturated to U
        saturated: True when the saturation changed the action
        predicted_states: (N+1, nx) nominal prediction
        predicted_inputs: (N, nu) nominal absolute inputs
        qp_status: Solver status
        qp_iterations: Solver iterations
        objective: Optimal value of the tracking cost
        latency_ms: Wall time of the solve
    """

    x_check0: _np.ndarray
    u_check0: _np.ndarray
    u_ancillary: _np.ndarray
    u_exec: _np.ndarray
    saturated: bool
    predicted_states: _np.ndarray
    predicted_inputs: _np.ndarray
    qp_status: str
    qp_iterations: int = 0
    objective: float = 0.0
    latency_ms: float = 0.0


class _StackedQp:
    """Fixed QP structure (Hessian, dynamics) for one model and horizon."""

    def __init__(self, model: LtiModel, weights: CostWeights, horizon: int):
        nx, nu, N = model.nx, model.nu, horizon
        self.nx, self.nu, self.N = nx, nu, N
        self.n_states = (N + 1) * nx
        self.n = self.n_states + N * nu
        self.Q = weights.Q
        self.P = weights.terminal
        self.u_trim = model.u_trim

        H = _np.zeros((self.n, self.n))
        for k in range(N):
            H[k * nx : (k + 1) * nx, k * nx : (k + 1) * nx] = 2.0 * weights.Q
            j = self.n_states + k * nu
            H[j : j + nu, j : j + nu] = 2.0 * weights.R
        H[N * nx : (N + 1) * nx, N * nx : (N + 1) * nx] = 2.0 * self.P
        self.H = H

        Aeq = _np.zeros((N * nx, self.n))
        for k in range(N):
            rows = slice(k * nx, (k + 1) * nx)
            Aeq[rows, k * nx : (k + 1) * nx] = -model.A
            Aeq[rows, (k + 1) * nx : (k + 2) * nx] = _np.eye(nx)
            j = self.n_states + k * nu
            Aeq[rows, j : j + nu] = -model.B
        self.Aeq = Aeq
        self.beq = _np.zeros(N * nx)

    def problem(
        self,
        targets: _np.ndarray,
        x0_box: BoxSet,
        X: BoxSet,
        U: BoxSet,
    ) -> QpProblem:
        nx, nu, N = self.nx, self.nu, self.N
        f = _np.zeros(self.n)
        c = 0.0
        for k in range(N + 1):
            W = self.Q if k < N else self.P
            r = targets[k]
            f[k * nx : (k + 1) * nx] = -2.0 * W @ r
            c += float(r @ W @ r)
        lb = _np.concatenate(
            [x0_box.lower, _np.tile(X.lower, N), _np.tile(U.lower - self.u_trim, N)]
        )
        ub = _np.concatenate(
            [x0_box.upper, _np.tile(X.upper, N), _np.tile(U.upper - self.u_trim, N)]
        )
        return QpProblem(H=self.H, f=f, Aeq=self.Aeq, beq=self.beq, lb=lb, ub=ub, c=c)

    def shift(self, xi: _np.ndarray) -> _np.ndarray:
        """Drop the first stage and repeat the last one."""
        nx, nu, N = self.nx, self.nu, self.N
        states = xi[: self.n_states].reshape(N + 1, nx)
        inputs = xi[self.n_states :].reshape(N, nu)
        states = _np.vstack([states[1:], states[-1:]])
        inputs = _np.vstack([inputs[1:], inputs[-1:]])
        return _np.concatenate([states.reshape(-1), inputs.reshape(-1)])

    def shift_duals(self, y: _np.ndarray) -> _np.ndarray:
        nx, N = self.nx, self.N
        eq = y[: N * nx].reshape(N, nx)
        eq = _np.vstack([eq[1:], eq[-1:]]).reshape(-1)
        box = self.shift(y[N * nx : N * nx + self.n])
        return _np.concatenate([eq, box, y[N * nx + self.n :]])


class RtmpcExpert:
    """Callable MPC / robust tube MPC controller.

    ``expert(state, window)`` returns the executed action. Each instance
    warm-starts its QP from the previous step's shifted solution, so use one
    instance per concurrently simulated episode.

    Args:
        model: Nominal linear model
        weights: Stage weights; ``weights.terminal`` is the terminal cost
        X: State constraint box
        U: Input constraint box (absolute inputs)
        tube: Tube approximation (default: the zero tube)
        K: Ancillary gain (nu x nx, default zero)
        horizon: Prediction horizon N
        robust: False for the nominal MPC (``x_0 = x_t``)
        settings: QP solver settings
        state_names: Axis names used in tightening errors
        input_names: Axis names used in tightening errors

    Raises:
        InfeasibleTighteningError: Tube too wide for X or U
    """

    def __init__(
        self,
        model: LtiModel,
        weights: CostWeights,
        X: BoxSet,
        U: BoxSet,
        tube: Optional[TubeApprox] = None,
        K=None,
        horizon: int = DEFAULT_HORIZON,
        robust: bool = True,
        settings: Optional[QpSettings] = None,
        state_names: Optional[Sequence[str]] = None,
        input_names: Optional[Sequence[str]] = None,
    ):
        if horizon < 1:
            raise InvalidParameterError(f"horizon must be >= 1, got {horizon}")
        nx, nu = model.nx, model.nu
        if X.dim != nx or U.dim != nu:
            raise InvalidParameterError("X/U dimensions do not match the model")
        if weights.Q.shape != (nx, nx) or weights.R.shape != (nu, nu):
            raise InvalidParameterError("Weight dimensions do not match the model")
        self.tube = tube if tube is not None else zero_tube(nx)
        if self.tube.dim != nx:
            raise InvalidParameterError("Tube dimension does not match the model")
        self.K = _np.zeros((nu, nx)) if K is None else _np.atleast_2d(_np.asarray(K, dtype=float))
        if self.K.shape != (nu, nx):
            raise InvalidParameterError(f"K must be {nu} x {nx}, got {self.K.shape}")
        if state_names is None and nx == len(STATE_NAMES):
            state_names = STATE_NAMES
        if input_names is None and nu == len(INPUT_NAMES):
            input_names = INPUT_NAMES

        self.model = model
        self.weights = weights
        self.X = X
        self.U = U
        self.horizon = horizon
        self.robust = robust
        self.X_tight = tighten_state_box(X, self.tube.z_box, state_names)
        self.U_tight = tighten_input_box(U, self.K, self.tube.z_box, input_names)
        self._qp = _StackedQp(model, weights, horizon)
        self._solver = QpSolver(settings)
        self._warm = None
        self.latencies_ms: List[float] = []
        self.saturation_count = 0
        self.lqr: Optional[LqrSolution] = None
        self.disturbance_set: Optional[BoxSet] = None

    def reset(self) -> None:
        """Forget the warm start (start of a new episode)."""
        self._warm = None

    def _initial_box(self, x_t: _np.ndarray) -> BoxSet:
        if not self.robust:
            if not self.X.contains(x_t):
                raise ExpertInfeasibleError("State lies outside the state constraints", x_t)
            return BoxSet(x_t, x_t)
        z = self.tube.z_box
        lo = _np.maximum(x_t - z.upper, self.X_tight.lower)
        hi = _np.minimum(x_t - z.lower, self.X_tight.upper)
        if _np.any(lo > hi):
            raise ExpertInfeasibleError(
                "No nominal initial state within the tube of the measured state", x_t
            )
        return BoxSet(lo, hi)

    def solve(self, state, window: ReferenceWindow) -> RtmpcSolution:
        """Solve one step and return the full :class:`RtmpcSolution`.

        Raises:
            ExpertInfeasibleError: State outside the admissible set or QP
                certified infeasible
        """
        x_t = _np.asarray(state, dtype=float).reshape(-1)
        if x_t.shape != (self.model.nx,) or not _np.all(_np.isfinite(x_t)):
            raise InvalidParameterError("State must be a finite vector of length nx")
        if window.horizon != self.horizon:
            raise InvalidParameterError(
                f"Window horizon {window.horizon} does not match controller horizon {self.horizon}"
            )

        x0_box = self._initial_box(x_t)
        problem = self._qp.problem(
            window.state_targets(self.model.nx), x0_box, self.X_tight, self.U_tight
        )
        start = _time.perf_counter()
        sol = self._solver.solve(problem, warm_start=self._warm)
        latency = 1e3 * (_time.perf_counter() - start)
        self.latencies_ms.append(latency)
        logger.debug(
            "Expert solve: %s in %d iterations, %.2f ms", sol.status, sol.iterations, latency
        )

        if sol.status == STATUS_INFEASIBLE:
            self._warm = None
            raise ExpertInfeasibleError("Expert QP is infeasible", x_t)
        if sol.status == STATUS_MAX_ITER:
            logger.warning(
                "Expert QP hit the iteration cap (primal %.2e, dual %.2e)",
                sol.primal_residual,
                sol.dual_residual,
            )
        self._warm = (self._qp.shift(sol.x_opt), self._qp.shift_duals(sol.y))

        nx, nu, N = self.model.nx, self.model.nu, self.horizon
        xi = sol.x_opt
        states = xi[: self._qp.n_states].reshape(N + 1, nx)
        inputs = xi[self._qp.n_states :].reshape(N, nu) + self.model.u_trim
        x_check0 = states[0].copy()
        u_check0 = inputs[0].copy()
        if self.robust:
            u_anc = u_check0 + self.K @ (x_t - x_check0)
        else:
            u_anc = u_check0.copy()
        u_exec = self.U.clip(u_anc)
        saturated = bool(_np.any(u_exec != u_anc))
        if saturated:
            self.saturation_count += 1
            logger.warning(
                "Ancillary action saturated to U: %s -> %s",
                _np.array2string(u_anc, precision=3),
                _np.array2string(u_exec, precision=3),
            )
        return RtmpcSolution(
            x_check0=x_check0,
            u_check0=u_check0,
            u_ancillary=u_anc,
            u_exec=u_exec,
            saturated=saturated,
            predicted_states=states.copy(),
            predicted_inputs=inputs,
            qp_status=sol.status,
            qp_iterations=sol.iterations,
            objective=sol.objective,
            latency_ms=latency,
        )

    def __call__(self, state, window: ReferenceWindow) -> _np.ndarray:
        return self.solve(state, window).u_exec

    def label(self, sample_states, solution: RtmpcSolution) -> _np.ndarray:
        """Ancillary labels ``u_check0 + K (x - x_check0)`` for tube samples."""
        D = _np.atleast_2d(_np.asarray(sample_states, dtype=float)) - solution.x_check0
        return solution.u_check0 + D @ self.K.T


def mpc_step(
    model: LtiModel,
    weights: CostWeights,
    X: BoxSet,
    U: BoxSet,
    x_t,
    ref: ReferenceWindow,
    N: int,
    settings: Optional[QpSettings] = None,
) -> _np.ndarray:
    """First action of the nominal trajectory-tracking MPC (``x_0 = x_t``).

    Raises:
        ExpertInfeasibleError: ``x_t`` outside X or infeasible QP
    """
    expert = RtmpcExpert(model, weights, X, U, horizon=N, robust=False, settings=settings)
    return expert.solve(x_t, ref).u_exec


def rtmpc_step(
    model: LtiModel,
    weights: CostWeights,
    X: BoxSet,
    U: BoxSet,
    tube: TubeApprox,
    K,
    x_t,
    ref: ReferenceWindow,
    N: int,
    settings: Optional[QpSettings] = None,
) -> RtmpcSolution:
    """One robust tube MPC step followed by the ancillary law.

    Raises:
        InfeasibleTighteningError: X - Z or U - KZ empty
        ExpertInfeasibleError: Infeasible QP
    """
    expert = RtmpcExpert(model, weights, X, U, tube=tube, K=K, horizon=N, settings=settings)
    return expert.solve(x_t, ref)


def build_quadrotor_expert(
    params: "QuadParams",
    dt: float = 0.1,
    horizon: int = DEFAULT_HORIZON,
    q_diag: Sequence[float] = DEFAULT_Q_DIAG,
    r_diag: Sequence[float] = DEFAULT_R_DIAG,
    w_fraction: float = 0.3,
    n_rollouts: int = 10000,
    tube_horizon: int = 200,
    tube_seed: int = 0,
    tube: Optional[TubeApprox] = None,
    lqr: Optional[LqrSolution] = None,
    robust: bool = True,
    settings: Optional[QpSettings] = None,
) -> RtmpcExpert:
    """Assemble the quadrotor RTMPC expert.

    Linearizes at hover, solves the DARE for ``P`` and ``K``, estimates the
    tube for ``W`` (force box of ``w_fraction`` of the weight) unless one is
    given, and tightens the constraints.
    """
    model = linearize_quadrotor_hover(params, dt)
    weights = CostWeights.from_diagonals(q_diag, r_diag)
    if lqr is None:
        weights, lqr = lqr_weights(model, weights)
    else:
        weights = weights.with_terminal(lqr.P)
    W = disturbance_box(params, w_fraction, dt)
    if tube is None and robust:
        tube = estimate_invariant_box(
            lqr.closed_loop(model), W, n_rollouts=n_rollouts, horizon=tube_horizon, seed=tube_seed
        )
    expert = RtmpcExpert(
        model,
        weights,
        params.state_box(),
        params.input_box(),
        tube=tube if robust else None,
        K=lqr.K if robust else None,
        horizon=horizon,
        robust=robust,
        settings=settings,
    )
    expert.lqr = lqr
    expert.disturbance_set = W
    return expert


# EOF
