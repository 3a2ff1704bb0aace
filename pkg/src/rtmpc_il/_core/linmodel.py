"""Nominal linear model, box constraint sets and constraint tightening.

State ordering is fixed as ``[px, py, pz, vx, vy, vz, roll, pitch]`` and
input ordering as ``[thrust, roll_cmd, pitch_cmd]``.
"""

from __future__ import annotations

import itertools as _itertools
from dataclasses import dataclass as _dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as _np

from .errors import InfeasibleTighteningError, InvalidParameterError

if TYPE_CHECKING:
    from .quadsim import QuadParams

__all__ = [
    "STATE_NAMES",
    "INPUT_NAMES",
    "LtiModel",
    "BoxSet",
    "CostWeights",
    "linearize_quadrotor_hover",
    "disturbance_box",
    "tighten_state_box",
    "tighten_input_box",
]

STATE_NAMES = ("px", "py", "pz", "vx", "vy", "vz", "roll", "pitch")
INPUT_NAMES = ("thrust", "roll_cmd", "pitch_cmd")

# Hard cap on vertex enumeration (2**20 points).
MAX_VERTEX_DIM = 20


def _frozen(array, ndim: int, name: str) -> _np.ndarray:
    arr = _np.array(array, dtype=float)
    if ndim == 1:
        arr = _np.atleast_1d(arr)
    elif ndim == 2:
        arr = _np.atleast_2d(arr)
    if arr.ndim != ndim:
        raise InvalidParameterError(f"{name} must be {ndim}-dimensional, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@_dataclass(frozen=True, eq=False)
class BoxSet:
    """Axis-aligned interval set ``{x : lower <= x <= upper}``.

    Attributes:
        lower: Lower bounds (may contain ``-inf``)
        upper: Upper bounds (may contain ``+inf``)
    """

    lower: _np.ndarray
    upper: _np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower, 1, "lower")
        up = _frozen(self.upper, 1, "upper")
        if lo.shape != up.shape:
            raise InvalidParameterError(
                f"Box bounds differ in dimension: {lo.shape} vs {up.shape}"
            )
        if _np.isnan(lo).any() or _np.isnan(up).any():
            raise InvalidParameterError("Box bounds must not be NaN")
        empty = _np.nonzero(lo > up)[0]
        if empty.size:
            i = int(empty[0])
            raise InvalidParameterError(
                f"Empty box along dimension {i}: lower {lo[i]} > upper {up[i]}"
            )
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def symmetric(cls, half_width: Sequence[float]) -> "BoxSet":
        """Box ``[-h, h]`` per axis."""
        h = _np.abs(_np.atleast_1d(_np.asarray(half_width, dtype=float)))
        return cls(-h, h)

    @classmethod
    def zeros(cls, dim: int) -> "BoxSet":
        """Degenerate box containing only the origin."""
        return cls(_np.zeros(dim), _np.zeros(dim))

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    @property
    def width(self) -> _np.ndarray:
        return self.upper - self.lower

    @property
    def half_width(self) -> _np.ndarray:
        """Elementwise ``max(|lower|, |upper|)``."""
        return _np.maximum(_np.abs(self.lower), _np.abs(self.upper))

    def _check_dim(self, x: _np.ndarray) -> _np.ndarray:
        x = _np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidParameterError(
                f"Dimension mismatch: box has {self.dim}, vector has {x.shape[-1]}"
            )
        return x

    def contains(self, x, tol: float = 0.0) -> bool:
        """Elementwise membership ``lower - tol <= x <= upper + tol``."""
        x = self._check_dim(x)
        return bool(
            _np.all(x >= self.lower - tol) and _np.all(x <= self.upper + tol)
        )

    def clip(self, x) -> _np.ndarray:
        """Project ``x`` onto the box."""
        return _np.clip(self._check_dim(x), self.lower, self.upper)

    def scaled(self, factor: float) -> "BoxSet":
        """Box scaled about the origin by a non-negative factor."""
        if factor < 0:
            raise InvalidParameterError(f"Scale factor must be >= 0, got {factor}")
        return BoxSet(self.lower * factor, self.upper * factor)

    def shifted(self, offset) -> "BoxSet":
        """Box translated by ``offset``."""
        offset = self._check_dim(offset)
        return BoxSet(self.lower + offset, self.upper + offset)

    def intersect(self, other: "BoxSet") -> "BoxSet":
        """Intersection; raises if empty."""
        if other.dim != self.dim:
            raise InvalidParameterError("Cannot intersect boxes of different dimension")
        return BoxSet(
            _np.maximum(self.lower, other.lower), _np.minimum(self.upper, other.upper)
        )

    def is_subset_of(self, other: "BoxSet", tol: float = 0.0) -> bool:
        return bool(
            _np.all(self.lower >= other.lower - tol)
            and _np.all(self.upper <= other.upper + tol)
        )

    def vertices(self) -> _np.ndarray:
        """All ``2**dim`` corners in lexicographic order, lower bound first."""
        if self.dim > MAX_VERTEX_DIM:
            raise InvalidParameterError(
                f"Refusing to enumerate 2**{self.dim} vertices (max dim {MAX_VERTEX_DIM})"
            )
        pairs = [(lo, up) for lo, up in zip(self.lower, self.upper)]
        return _np.array(list(_itertools.product(*pairs)), dtype=float).reshape(
            -1, self.dim
        )

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "BoxSet":
        return cls(data["lower"], data["upper"])


@_dataclass(frozen=True, eq=False)
class LtiModel:
    """Nominal discrete dynamics ``x+ = A x + B (u - u_trim)``.

    Attributes:
        A: State transition matrix (nx x nx)
        B: Input matrix (nx x nu)
        dt: Discretization step in seconds
        u_trim: Equilibrium input; the model acts on deviations from it
    """

    A: _np.ndarray
    B: _np.ndarray
    dt: float
    u_trim: Optional[_np.ndarray] = None

    def __post_init__(self):
        A = _frozen(self.A, 2, "A")
        B = _frozen(self.B, 2, "B")
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidParameterError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0] or B.shape[1] < 1:
            raise InvalidParameterError(
                f"B must be {A.shape[0]} x nu with nu >= 1, got {B.shape}"
            )
        if not self.dt > 0:
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        trim = _np.zeros(B.shape[1]) if self.u_trim is None else self.u_trim
        trim = _frozen(trim, 1, "u_trim")
        if trim.shape[0] != B.shape[1]:
            raise InvalidParameterError("u_trim length must equal nu")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "u_trim", trim)

    @property
    def nx(self) -> int:
        return int(self.A.shape[0])

    @property
    def nu(self) -> int:
        return int(self.B.shape[1])

    def step(self, x, u) -> _np.ndarray:
        """One nominal step with absolute input ``u``."""
        return self.A @ _np.asarray(x, dtype=float) + self.B @ (
            _np.asarray(u, dtype=float) - self.u_trim
        )

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "nx": self.nx,
            "nu": self.nu,
            "dt": self.dt,
            "u_trim": self.u_trim.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LtiModel":
        return cls(A=data["A"], B=data["B"], dt=data["dt"], u_trim=data.get("u_trim"))


def _check_spd(M: _np.ndarray, name: str) -> None:
    if not _np.allclose(M, M.T, atol=1e-12 * max(1.0, _np.abs(M).max())):
        raise InvalidParameterError(f"{name} must be symmetric")
    try:
        _np.linalg.cholesky(M)
    except _np.linalg.LinAlgError as e:
        raise InvalidParameterError(f"{name} must be positive definite") from e


@_dataclass(frozen=True, eq=False)
class CostWeights:
    """Stage weights ``Q``, ``R`` and terminal weight ``P``.

    ``P`` may be left unset until the Riccati solution is known
    (see :func:`rtmpc_il._core.riccati.lqr_weights`).
    """

    Q: _np.ndarray
    R: _np.ndarray
    P: Optional[_np.ndarray] = None

    def __post_init__(self):
        Q = _frozen(self.Q, 2, "Q")
        R = _frozen(self.R, 2, "R")
        _check_spd(Q, "Q")
        _check_spd(R, "R")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        if self.P is not None:
            P = _frozen(self.P, 2, "P")
            if P.shape != Q.shape:
                raise InvalidParameterError("P must have the same shape as Q")
            _check_spd(P, "P")
            object.__setattr__(self, "P", P)

    @classmethod
    def from_diagonals(cls, q_diag, r_diag, p_diag=None) -> "CostWeights":
        P = None if p_diag is None else _np.diag(p_diag)
        return cls(_np.diag(q_diag), _np.diag(r_diag), P)

    def with_terminal(self, P) -> "CostWeights":
        return CostWeights(self.Q, self.R, P)

    @property
    def terminal(self) -> _np.ndarray:
        """``P`` if set, otherwise ``Q``."""
        return self.Q if self.P is None else self.P

    def to_dict(self) -> dict:
        return {
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "P": None if self.P is None else self.P.tolist(),
        }


def linearize_quadrotor_hover(params: "QuadParams", dt: float) -> LtiModel:
    """Forward-Euler discretization of the hover-linearized quadrotor.

    Small-angle tilt-to-acceleration gain (``g * tilt``), linear drag and a
    first-order tilt lag toward the commanded tilt. Inputs are absolute;
    the model stores hover thrust as its trim input.

    Args:
        params: Vehicle parameters (mass, gravity, tilt time constant, drag)
        dt: Sampling time in seconds

    Returns:
        LtiModel with nx=8, nu=3

    Raises:
        InvalidParameterError: For non-positive mass, time constant or dt
    """
    if not params.mass > 0:
        raise InvalidParameterError(f"mass must be positive, got {params.mass}")
    if not params.tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {params.tau}")
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")

    g, m, tau, cd = params.gravity, params.mass, params.tau, params.drag
    Ac = _np.zeros((8, 8))
    Ac[0:3, 3:6] = _np.eye(3)
    Ac[3:6, 3:6] = -cd * _np.eye(3)
    Ac[3, 7] = g  # pitch -> +x
    Ac[4, 6] = -g  # roll -> -y
    Ac[6, 6] = Ac[7, 7] = -1.0 / tau

    Bc = _np.zeros((8, 3))
    Bc[5, 0] = 1.0 / m
    Bc[6, 1] = Bc[7, 2] = 1.0 / tau

    return LtiModel(
        A=_np.eye(8) + dt * Ac,
        B=dt * Bc,
        dt=dt,
        u_trim=_np.array([m * g, 0.0, 0.0]),
    )


def disturbance_box(params: "QuadParams", fraction: float, dt: float) -> BoxSet:
    """Additive state disturbance set of the Euler model.

    A force box of ``fraction * m * g`` per axis enters the velocity rows
    as ``dt / m * force``.
    """
    if not 0.0 <= fraction <= 0.3:
        raise InvalidParameterError(
            f"Disturbance fraction must lie in [0, 0.3], got {fraction}"
        )
    half = _np.zeros(8)
    half[3:6] = fraction * params.gravity * dt
    return BoxSet.symmetric(half)


def _first_empty(lower: _np.ndarray, upper: _np.ndarray) -> int:
    bad = _np.nonzero(lower > upper)[0]
    return int(bad[0]) if bad.size else -1


def tighten_state_box(
    X: BoxSet, Z: BoxSet, names: Optional[Sequence[str]] = None
) -> BoxSet:
    """Minkowski difference ``X - Z`` of two boxes (``Z`` contains the origin).

    Raises:
        InfeasibleTighteningError: If the tube is wider than the constraint
    """
    if X.dim != Z.dim:
        raise InvalidParameterError(f"X has dim {X.dim}, Z has dim {Z.dim}")
    lower = X.lower - Z.lower
    upper = X.upper - Z.upper
    i = _first_empty(lower, upper)
    if i >= 0:
        raise InfeasibleTighteningError(
            i,
            names[i] if names else None,
            f"constraint [{X.lower[i]}, {X.upper[i]}] vs tube [{Z.lower[i]}, {Z.upper[i]}]",
        )
    return BoxSet(lower, upper)


def tighten_input_box(
    U: BoxSet, K, Z: BoxSet, names: Optional[Sequence[str]] = None
) -> BoxSet:
    """Shrink ``U`` by an interval bound on ``K Z``.

    The bound for output ``j`` is ``sum_i |K[j, i]| * max(|Z.lower[i]|, |Z.upper[i]|)``.

    Raises:
        InfeasibleTighteningError: If the shrunk box is empty
    """
    K = _np.atleast_2d(_np.asarray(K, dtype=float))
    if K.shape != (U.dim, Z.dim):
        raise InvalidParameterError(
            f"K must be {U.dim} x {Z.dim}, got {K.shape}"
        )
    bound = _np.abs(K) @ Z.half_width
    lower = U.lower + bound
    upper = U.upper - bound
    i = _first_empty(lower, upper)
    if i >= 0:
        raise InfeasibleTighteningError(
            i,
            names[i] if names else None,
            f"input range [{U.lower[i]}, {U.upper[i]}] vs K-tube bound {bound[i]:.4g}",
        )
    return BoxSet(lower, upper)


# EOF
