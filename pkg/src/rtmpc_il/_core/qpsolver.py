"""Dense convex QP solver (ADMM operator splitting with solution polishing).

Problem form::

    minimize    1/2 x'Hx + f'x + c
    subject to  Aeq x = beq
                lb <= x <= ub
                bin_lo <= Ain x <= bin_hi

All constraints are stacked into one block ``l <= C x <= u`` with
``C = [Aeq; I; Ain]``. Multipliers follow the sign convention
``Hx + f + C'y = 0``: negative entries mark active lower bounds, positive
entries active upper bounds.
"""

import logging
import warnings
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from dataclasses import replace as _replace
from typing import Optional, Tuple

import numpy as _np
import scipy.linalg as _sla

from .errors import InvalidParameterError, NumericError

logger = logging.getLogger(__name__)

__all__ = [
    "QpProblem",
    "QpSolution",
    "QpSettings",
    "QpSolver",
    "solve_qp",
    "STATUS_SOLVED",
    "STATUS_MAX_ITER",
    "STATUS_INFEASIBLE",
]

STATUS_SOLVED = "solved"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE = "infeasible"


def _vec(value, n: int, fill: float, name: str) -> _np.ndarray:
    if value is None:
        return _np.full(n, fill)
    arr = _np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise InvalidParameterError(f"{name} must have length {n}, got {arr.shape}")
    if _np.isnan(arr).any():
        raise InvalidParameterError(f"{name} must not contain NaN")
    return arr


def _mat(value, cols: int, name: str) -> _np.ndarray:
    if value is None:
        return _np.zeros((0, cols))
    arr = _np.atleast_2d(_np.asarray(value, dtype=float))
    if arr.shape[1] != cols:
        raise InvalidParameterError(f"{name} must have {cols} columns, got {arr.shape}")
    return arr


@_dataclass(eq=False)
class QpProblem:
    """Dense QP data. Optional blocks default to empty or unbounded."""

    H: _np.ndarray
    f: _np.ndarray
    Aeq: Optional[_np.ndarray] = None
    beq: Optional[_np.ndarray] = None
    lb: Optional[_np.ndarray] = None
    ub: Optional[_np.ndarray] = None
    Ain: Optional[_np.ndarray] = None
    bin_lo: Optional[_np.ndarray] = None
    bin_hi: Optional[_np.ndarray] = None
    c: float = 0.0

    def __post_init__(self):
        f = _np.asarray(self.f, dtype=float).reshape(-1)
        n = f.shape[0]
        if n < 1:
            raise InvalidParameterError("QP needs at least one variable")
        H = _np.atleast_2d(_np.asarray(self.H, dtype=float))
        if H.shape != (n, n):
            raise InvalidParameterError(f"H must be {n} x {n}, got {H.shape}")
        self.H = 0.5 * (H + H.T)
        self.f = f
        self.Aeq = _mat(self.Aeq, n, "Aeq")
        self.beq = _vec(self.beq, self.Aeq.shape[0], 0.0, "beq")
        self.lb = _vec(self.lb, n, -_np.inf, "lb")
        self.ub = _vec(self.ub, n, _np.inf, "ub")
        self.Ain = _mat(self.Ain, n, "Ain")
        self.bin_lo = _vec(self.bin_lo, self.Ain.shape[0], -_np.inf, "bin_lo")
        self.bin_hi = _vec(self.bin_hi, self.Ain.shape[0], _np.inf, "bin_hi")
        self.c = float(self.c)
        if _np.any(self.lb > self.ub) or _np.any(self.bin_lo > self.bin_hi):
            raise InvalidParameterError("QP bounds with lower > upper")

    @property
    def n(self) -> int:
        return int(self.f.shape[0])

    @property
    def n_eq(self) -> int:
        return int(self.Aeq.shape[0])

    @property
    def n_in(self) -> int:
        return int(self.Ain.shape[0])

    def objective(self, x) -> float:
        x = _np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.f @ x + self.c)

    def stacked(self) -> Tuple[_np.ndarray, _np.ndarray, _np.ndarray]:
        """``(C, l, u)`` of the combined constraint block."""
        C = _np.vstack([self.Aeq, _np.eye(self.n), self.Ain])
        lo = _np.concatenate([self.beq, self.lb, self.bin_lo])
        up = _np.concatenate([self.beq, self.ub, self.bin_hi])
        return C, lo, up


@_dataclass(eq=False)
class QpSolution:
    """Solver output.

    Attributes:
        x_opt: Decision vector (inside the variable box)
        objective: Objective value including the constant term
        primal_residual: Max constraint violation of x_opt
        dual_residual: Max stationarity residual
        iterations: ADMM iterations performed
        status: ``solved``, ``max_iter`` or ``infeasible``
        y: Stacked multipliers ``[eq | box | ineq]``
        polished: True if x_opt came from the active-set polish
    """

    x_opt: _np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str
    y: _np.ndarray = _field(default_factory=lambda: _np.zeros(0))
    polished: bool = False
    n_eq: int = 0
    n: int = 0

    @property
    def eq_multipliers(self) -> _np.ndarray:
        return self.y[: self.n_eq]

    @property
    def box_multipliers(self) -> _np.ndarray:
        return self.y[self.n_eq : self.n_eq + self.n]

    @property
    def ineq_multipliers(self) -> _np.ndarray:
        return self.y[self.n_eq + self.n :]

    @property
    def solved(self) -> bool:
        return self.status == STATUS_SOLVED


@_dataclass(frozen=True)
class QpSettings:
    """ADMM and polish parameters."""

    rho: float = 1.0
    sigma: float = 1e-6
    alpha: float = 1.6
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iter: int = 20000
    check_interval: int = 10
    eq_rho_scale: float = 1e3
    rho_min: float = 1e-6
    eps_infeasible: float = 1e-5
    polish: bool = True
    polish_delta: float = 1e-9
    polish_refine_iter: int = 3
    polish_trigger: float = 1e3

    def __post_init__(self):
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise InvalidParameterError("Tolerances must be positive")
        if self.max_iter < 1 or self.check_interval < 1:
            raise InvalidParameterError("max_iter and check_interval must be >= 1")
        if not 0 < self.alpha < 2:
            raise InvalidParameterError("alpha must lie in (0, 2)")


class QpSolver:
    """ADMM solver instance.

    Owns its workspace and caches the factorization of
    ``H + sigma I + C' diag(rho) C`` across calls with the same matrices.
    An instance is not reentrant.
    """

    def __init__(self, settings: Optional[QpSettings] = None):
        self.settings = settings or QpSettings()
        self._key = None
        self._factor = None

    # -- workspace ---------------------------------------------------------

    def _rho_vector(self, lo: _np.ndarray, up: _np.ndarray) -> _np.ndarray:
        s = self.settings
        rho = _np.full(lo.shape[0], s.rho)
        rho[lo == up] = s.rho * s.eq_rho_scale
        rho[_np.isinf(lo) & _np.isinf(up)] = s.rho_min
        return rho

    def _factorize(self, problem: QpProblem, C: _np.ndarray, rho: _np.ndarray):
        key = self._key
        if (
            key is not None
            and key[0].shape == problem.H.shape
            and key[1].shape == C.shape
            and _np.array_equal(key[0], problem.H)
            and _np.array_equal(key[1], C)
            and _np.array_equal(key[2], rho)
        ):
            return self._factor
        M = problem.H + self.settings.sigma * _np.eye(problem.n) + C.T @ (rho[:, None] * C)
        try:
            factor = _sla.cho_factor(M)
        except _np.linalg.LinAlgError as e:
            raise NumericError("QP Hessian is not positive semidefinite") from e
        self._key = (problem.H.copy(), C.copy(), rho.copy())
        self._factor = factor
        return factor

    # -- residuals ---------------------------------------------------------

    @staticmethod
    def _residuals(problem, C, lo, up, x, y) -> Tuple[float, float]:
        Cx = C @ x
        prim = float(_np.max(_np.abs(Cx - _np.clip(Cx, lo, up)), initial=0.0))
        dual = float(_np.max(_np.abs(problem.H @ x + problem.f + C.T @ y), initial=0.0))
        return prim, dual

    def _primal_infeasible(self, C, lo, up, dy) -> bool:
        eps = self.settings.eps_infeasible
        norm = float(_np.max(_np.abs(dy), initial=0.0))
        if norm < eps:
            return False
        if _np.max(_np.abs(C.T @ dy)) > eps * norm:
            return False
        pos = dy > 0
        neg = dy < 0
        support = float(up[pos] @ dy[pos] + lo[neg] @ dy[neg])
        return support < -eps * norm

    # -- polish ------------------------------------------------------------

    def _polish(self, problem, C, lo, up, z, y):
        s = self.settings
        n = problem.n
        eq = lo == up
        lower = (z - lo < -y) | eq
        upper = (up - z < y) & ~eq
        active = lower | upper
        target = _np.where(upper, up, lo)[active]
        Ca = C[active]
        k = Ca.shape[0]

        K0 = _np.block([[problem.H, Ca.T], [Ca, _np.zeros((k, k))]])
        Kd = K0 + _np.diag(_np.concatenate([_np.full(n, s.polish_delta), _np.full(k, -s.polish_delta)]))
        rhs = _np.concatenate([-problem.f, target])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                lu = _sla.lu_factor(Kd)
                sol = _sla.lu_solve(lu, rhs)
                for _ in range(s.polish_refine_iter):
                    sol = sol + _sla.lu_solve(lu, rhs - K0 @ sol)
            except (_np.linalg.LinAlgError, ValueError):
                return None
        if not _np.all(_np.isfinite(sol)):
            return None

        x = _np.clip(sol[:n], problem.lb, problem.ub)
        y_full = _np.zeros(C.shape[0])
        y_full[active] = sol[n:]
        prim, dual = self._residuals(problem, C, lo, up, x, y_full)
        signs_ok = _np.all(y_full[lower & ~eq] <= s.tol_dual) and _np.all(
            y_full[upper] >= -s.tol_dual
        )
        if prim <= s.tol_primal and dual <= s.tol_dual and signs_ok:
            return x, y_full, prim, dual
        return None

    # -- main loop ---------------------------------------------------------

    def solve(
        self,
        problem: QpProblem,
        warm_start: Optional[Tuple[_np.ndarray, Optional[_np.ndarray]]] = None,
    ) -> QpSolution:
        """Solve ``problem``, optionally from a ``(x, y)`` warm start."""
        s = self.settings
        C, lo, up = problem.stacked()
        m = C.shape[0]
        rho = self._rho_vector(lo, up)
        factor = self._factorize(problem, C, rho)

        def _finish(x, y, prim, dual, it, status, polished=False):
            if status != STATUS_SOLVED:
                logger.debug("QP ended with status %s after %d iterations", status, it)
            return QpSolution(
                x_opt=x,
                objective=problem.objective(x),
                primal_residual=prim,
                dual_residual=dual,
                iterations=it,
                status=status,
                y=y,
                polished=polished,
                n_eq=problem.n_eq,
                n=problem.n,
            )

        x = _np.zeros(problem.n)
        y = _np.zeros(m)
        if warm_start is not None:
            wx, wy = warm_start
            if wx is not None and _np.shape(wx) == (problem.n,):
                x = _np.asarray(wx, dtype=float).copy()
            if wy is not None and _np.shape(wy) == (m,):
                y = _np.asarray(wy, dtype=float).copy()
            xc = _np.clip(x, problem.lb, problem.ub)
            prim, dual = self._residuals(problem, C, lo, up, xc, y)
            if prim <= s.tol_primal and dual <= s.tol_dual:
                return _finish(xc, y, prim, dual, 0, STATUS_SOLVED)
        z = _np.clip(C @ x, lo, up)

        trigger = s.polish_trigger
        prim = dual = _np.inf
        it = 0
        for it in range(1, s.max_iter + 1):
            rhs = s.sigma * x - problem.f + C.T @ (rho * z - y)
            x_tilde = _sla.cho_solve(factor, rhs)
            z_tilde = C @ x_tilde
            x = s.alpha * x_tilde + (1.0 - s.alpha) * x
            z_relaxed = s.alpha * z_tilde + (1.0 - s.alpha) * z
            z_next = _np.clip(z_relaxed + y / rho, lo, up)
            y_next = y + rho * (z_relaxed - z_next)
            dy = y_next - y
            z, y = z_next, y_next

            if it % s.check_interval and it != s.max_iter:
                continue
            xc = _np.clip(x, problem.lb, problem.ub)
            prim, dual = self._residuals(problem, C, lo, up, xc, y)
            if prim <= s.tol_primal and dual <= s.tol_dual:
                return _finish(xc, y, prim, dual, it, STATUS_SOLVED)
            if s.polish and max(prim / s.tol_primal, dual / s.tol_dual) <= trigger:
                polished = self._polish(problem, C, lo, up, z, y)
                if polished is not None:
                    px, py, pprim, pdual = polished
                    return _finish(px, py, pprim, pdual, it, STATUS_SOLVED, polished=True)
                trigger = max(1.0, trigger / 10.0)
            if self._primal_infeasible(C, lo, up, dy):
                return _finish(xc, y, prim, dual, it, STATUS_INFEASIBLE)

        if s.polish:
            polished = self._polish(problem, C, lo, up, z, y)
            if polished is not None:
                px, py, pprim, pdual = polished
                return _finish(px, py, pprim, pdual, it, STATUS_SOLVED, polished=True)
        xc = _np.clip(x, problem.lb, problem.ub)
        return _finish(xc, y, prim, dual, it, STATUS_MAX_ITER)


def solve_qp(
    problem: QpProblem,
    tol_primal: float = 1e-6,
    tol_dual: float = 1e-6,
    max_iter: int = 20000,
    warm_start: Optional[Tuple[_np.ndarray, Optional[_np.ndarray]]] = None,
    settings: Optional[QpSettings] = None,
) -> QpSolution:
    """Solve a QP with a fresh :class:`QpSolver`.

    Args:
        problem: QP data
        tol_primal: Primal residual tolerance
        tol_dual: Dual residual tolerance
        max_iter: ADMM iteration cap
        warm_start: Optional ``(x, y)`` starting point
        settings: Base settings; the tolerances and cap above override it

    Returns:
        QpSolution (status ``max_iter`` carries the last iterate)
    """
    base = settings or QpSettings()
    cfg = _replace(base, tol_primal=tol_primal, tol_dual=tol_dual, max_iter=max_iter)
    return QpSolver(cfg).solve(problem, warm_start=warm_start)


# EOF
