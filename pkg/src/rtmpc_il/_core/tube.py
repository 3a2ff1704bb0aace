"""Monte-Carlo outer box of the disturbance-invariant set of ``A_K``."""

import logging
import math as _math
from dataclasses import dataclass as _dataclass

import numpy as _np

from .errors import InvalidParameterError, NumericError
from .linmodel import MAX_VERTEX_DIM, BoxSet

logger = logging.getLogger(__name__)

__all__ = ["TubeApprox", "estimate_invariant_box", "contains", "zero_tube"]

DEFAULT_ROLLOUTS = 10000
DEFAULT_HORIZON = 200
CHUNK_SIZE = 500
GROWTH_TOLERANCE = 0.01


@_dataclass(frozen=True, eq=False)
class TubeApprox:
    """Hyper-rectangle outer approximation of the tube.

    Attributes:
        z_box: Box containing the origin
        samples_used: Number of uniform rollouts
        horizon_used: Rollout length
        seed: Seed of the uniform draws
        converged: False when the envelope was still growing near the end
    """

    z_box: BoxSet
    samples_used: int
    horizon_used: int
    seed: int
    converged: bool = True

    def __post_init__(self):
        if _np.any(self.z_box.lower > 0) or _np.any(self.z_box.upper < 0):
            raise InvalidParameterError("Tube box must contain the origin")

    @property
    def dim(self) -> int:
        return self.z_box.dim

    def to_dict(self) -> dict:
        return {
            "z_box": self.z_box.to_dict(),
            "samples_used": self.samples_used,
            "horizon_used": self.horizon_used,
            "seed": self.seed,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TubeApprox":
        return cls(
            z_box=BoxSet.from_dict(data["z_box"]),
            samples_used=int(data["samples_used"]),
            horizon_used=int(data["horizon_used"]),
            seed=int(data["seed"]),
            converged=bool(data.get("converged", True)),
        )


def zero_tube(dim: int) -> TubeApprox:
    """Degenerate tube ``{0}``."""
    return TubeApprox(BoxSet.zeros(dim), samples_used=0, horizon_used=0, seed=0)


def _distinct_vertices(W: BoxSet) -> _np.ndarray:
    """Corners of W over its non-degenerate axes only."""
    free = _np.nonzero(W.upper > W.lower)[0]
    if free.size > MAX_VERTEX_DIM:
        logger.warning(
            "Skipping vertex rollouts: W has %d non-degenerate axes", free.size
        )
        return _np.empty((0, W.dim))
    sub = BoxSet(W.lower[free], W.upper[free]).vertices()
    verts = _np.tile(W.lower, (sub.shape[0], 1))
    verts[:, free] = sub
    return verts


def estimate_invariant_box(
    A_K,
    W: BoxSet,
    n_rollouts: int = DEFAULT_ROLLOUTS,
    horizon: int = DEFAULT_HORIZON,
    seed: int = 0,
    include_vertices: bool = True,
    symmetrize: bool = True,
) -> TubeApprox:
    """Estimate the tube box by simulating ``e+ = A_K e + w`` from ``e = 0``.

    Uniform draws from W are complemented by rollouts that repeat a single
    vertex of W for the whole horizon. The envelope of all visited errors is
    symmetrized per axis.

    Args:
        A_K: Closed-loop matrix (nx x nx), spectral radius below 1
        W: Disturbance box (dimension nx)
        n_rollouts: Uniform rollouts
        horizon: Steps per rollout
        seed: Seed of the uniform draws
        include_vertices: Add repeated-vertex rollouts
        symmetrize: Replace the envelope by ``[-h, h]``, ``h = max(|lo|, |hi|)``

    Returns:
        TubeApprox; ``converged`` is False if any axis of the envelope grew
        by more than 1% over the last 10% of steps

    Raises:
        NumericError: ``A_K`` is not stable
        InvalidParameterError: Bad dimensions or counts
    """
    A_K = _np.atleast_2d(_np.asarray(A_K, dtype=float))
    nx = A_K.shape[0]
    if A_K.shape != (nx, nx) or W.dim != nx:
        raise InvalidParameterError(f"A_K {A_K.shape} and W (dim {W.dim}) do not match")
    if n_rollouts < 1 or horizon < 1:
        raise InvalidParameterError("n_rollouts and horizon must be >= 1")
    rho = float(_np.max(_np.abs(_np.linalg.eigvals(A_K))))
    if rho >= 1.0:
        raise NumericError(f"A_K is not stable (spectral radius {rho:.6f})")

    # Envelope (half-width) at the step where the last 10% window starts
    check_step = horizon - max(1, int(_math.ceil(0.1 * horizon)))
    lo = _np.zeros(nx)
    hi = _np.zeros(nx)
    lo_early = _np.zeros(nx)
    hi_early = _np.zeros(nx)

    def _absorb(E: _np.ndarray, t: int) -> None:
        _np.minimum(lo, E.min(axis=0), out=lo)
        _np.maximum(hi, E.max(axis=0), out=hi)
        if t < check_step:
            _np.minimum(lo_early, E.min(axis=0), out=lo_early)
            _np.maximum(hi_early, E.max(axis=0), out=hi_early)

    A_T = A_K.T
    n_chunks = -(-n_rollouts // CHUNK_SIZE)
    streams = _np.random.SeedSequence(seed).spawn(n_chunks)
    for j, stream in enumerate(streams):
        count = min(CHUNK_SIZE, n_rollouts - j * CHUNK_SIZE)
        # (rollouts, horizon, nx) in C order keeps rollout prefixes stable
        draws = _np.random.default_rng(stream).uniform(
            W.lower, W.upper, size=(count, horizon, nx)
        )
        E = _np.zeros((count, nx))
        for t in range(horizon):
            E = E @ A_T + draws[:, t, :]
            _absorb(E, t)

    if include_vertices:
        V = _distinct_vertices(W)
        if V.shape[0]:
            E = _np.zeros_like(V)
            for t in range(horizon):
                E = E @ A_T + V
                _absorb(E, t)

    half = _np.maximum(_np.abs(lo), _np.abs(hi))
    half_early = _np.maximum(_np.abs(lo_early), _np.abs(hi_early))
    growth = half - half_early
    converged = bool(_np.all(growth <= GROWTH_TOLERANCE * _np.maximum(half_early, 1e-300)))
    if not converged:
        axis = int(_np.argmax(growth))
        logger.warning(
            "Tube envelope still growing on axis %d over the last 10%% of %d steps; "
            "increase the horizon",
            axis,
            horizon,
        )

    z_box = BoxSet(-half, half) if symmetrize else BoxSet(lo, hi)
    logger.info("Tube box half-widths: %s", _np.array2string(half, precision=4))
    return TubeApprox(
        z_box=z_box,
        samples_used=n_rollouts,
        horizon_used=horizon,
        seed=seed,
        converged=converged,
    )


def contains(tube: TubeApprox, e, inflation: float = 1.0) -> bool:
    """``inflation * lower <= e <= inflation * upper`` elementwise."""
    if inflation < 1.0:
        raise InvalidParameterError(f"inflation must be >= 1, got {inflation}")
    e = _np.asarray(e, dtype=float)
    if e.shape != (tube.dim,):
        raise InvalidParameterError(
            f"Dimension mismatch: tube has {tube.dim}, vector has {e.shape}"
        )
    return bool(
        _np.all(e >= inflation * tube.z_box.lower) and _np.all(e <= inflation * tube.z_box.upper)
    )


# EOF
