"""Infinite-horizon discrete-time LQR via Riccati fixed-point iteration."""

import logging
from dataclasses import dataclass as _dataclass

import numpy as _np

from .errors import InvalidParameterError, NonConvergenceError, NumericError
from .linmodel import CostWeights, LtiModel

logger = logging.getLogger(__name__)

__all__ = ["LqrSolution", "solve_dare", "riccati_update", "lqr_weights"]

_REGULARIZATION = 1e-12


@_dataclass(frozen=True, eq=False)
class LqrSolution:
    """Solution of the discrete algebraic Riccati equation.

    Attributes:
        P: Value matrix (nx x nx), symmetric positive definite
        K: Feedback gain (nu x nx) with ``u = K x``
        spectral_radius: Largest eigenvalue magnitude of ``A + B K``
        iterations: Fixed-point iterations performed
        residual: ``||P - riccati_update(P)||_inf`` of the returned P
    """

    P: _np.ndarray
    K: _np.ndarray
    spectral_radius: float
    iterations: int
    residual: float

    def closed_loop(self, model: LtiModel) -> _np.ndarray:
        """``A_K = A + B K``."""
        return model.A + model.B @ self.K

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "K": self.K.tolist(),
            "spectral_radius": self.spectral_radius,
            "iterations": self.iterations,
            "residual": self.residual,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LqrSolution":
        return cls(
            P=_np.asarray(data["P"], dtype=float),
            K=_np.asarray(data["K"], dtype=float),
            spectral_radius=float(data["spectral_radius"]),
            iterations=int(data["iterations"]),
            residual=float(data["residual"]),
        )


def _solve_s(S: _np.ndarray, rhs: _np.ndarray) -> _np.ndarray:
    try:
        return _np.linalg.solve(S, rhs)
    except _np.linalg.LinAlgError:
        pass
    try:
        return _np.linalg.solve(S + _REGULARIZATION * _np.eye(S.shape[0]), rhs)
    except _np.linalg.LinAlgError as e:
        raise NumericError("R + B'PB is singular after regularization") from e


def riccati_update(P, A, B, Q, R) -> _np.ndarray:
    """One Riccati step ``A'PA - A'PB (R + B'PB)^-1 B'PA + Q``, symmetrized."""
    BtPA = B.T @ P @ A
    S = R + B.T @ P @ B
    nxt = A.T @ P @ A - BtPA.T @ _solve_s(S, BtPA) + Q
    return 0.5 * (nxt + nxt.T)


def solve_dare(
    model: LtiModel,
    weights: CostWeights,
    tol: float = 1e-10,
    max_iter: int = 100000,
) -> LqrSolution:
    """Solve the DARE by fixed-point iteration starting from ``P = Q``.

    Args:
        model: Nominal linear model
        weights: Stage weights; ``weights.P`` is ignored
        tol: Stop once ``||P_{k+1} - P_k||_inf < tol``
        max_iter: Iteration cap

    Returns:
        LqrSolution with ``K = -(R + B'PB)^-1 B'PA``

    Raises:
        NonConvergenceError: max_iter exceeded (e.g. unstabilizable pair)
        NumericError: Singular ``R + B'PB`` or unstable closed loop
    """
    if not tol > 0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    A, B, Q, R = model.A, model.B, weights.Q, weights.R
    if Q.shape != A.shape or R.shape != (model.nu, model.nu):
        raise InvalidParameterError("Weight dimensions do not match the model")

    P = Q.copy()
    residual = _np.inf
    for it in range(1, max_iter + 1):
        nxt = riccati_update(P, A, B, Q, R)
        residual = float(_np.max(_np.abs(nxt - P)))
        P = nxt
        if not _np.all(_np.isfinite(P)):
            raise NonConvergenceError("Riccati iteration", residual, it)
        if residual < tol:
            break
    else:
        raise NonConvergenceError("Riccati iteration", residual, max_iter)

    K = -_solve_s(R + B.T @ P @ B, B.T @ P @ A)
    rho = float(_np.max(_np.abs(_np.linalg.eigvals(A + B @ K))))
    if rho >= 1.0:
        raise NumericError(f"Closed loop A + BK is not stable (spectral radius {rho:.6f})")
    final = float(_np.max(_np.abs(riccati_update(P, A, B, Q, R) - P)))
    logger.info(
        "DARE converged in %d iterations (residual %.2e, rho(A_K) = %.4f)", it, final, rho
    )
    return LqrSolution(P=P, K=K, spectral_radius=rho, iterations=it, residual=final)


def lqr_weights(model: LtiModel, weights: CostWeights, **kwargs) -> tuple:
    """Return ``(weights_with_terminal_P, LqrSolution)``."""
    sol = solve_dare(model, weights, **kwargs)
    return weights.with_terminal(sol.P), sol


# EOF
