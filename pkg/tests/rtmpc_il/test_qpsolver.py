"""Tests for the dense ADMM QP solver."""

import numpy as np
import pytest

from rtmpc_il import InvalidParameterError, NumericError, QpProblem, QpSettings, QpSolver, solve_qp
from rtmpc_il._core.qpsolver import STATUS_INFEASIBLE, STATUS_MAX_ITER, STATUS_SOLVED


# ---------- Optimality ----------


def test_unconstrained_minimizer():
    problem = QpProblem(H=np.diag([2.0, 4.0]), f=[-2.0, -4.0])

    sol = solve_qp(problem)

    assert sol.status == STATUS_SOLVED
    np.testing.assert_allclose(sol.x_opt, [1.0, 1.0], atol=1e-5)
    assert sol.objective == pytest.approx(-3.0, abs=1e-6)


def test_active_upper_bound_has_positive_multiplier():
    # min (x - 2)^2 subject to x <= 1
    problem = QpProblem(H=[[2.0]], f=[-4.0], ub=[1.0], c=4.0)

    sol = solve_qp(problem)

    assert sol.solved
    np.testing.assert_allclose(sol.x_opt, [1.0], atol=1e-6)
    assert sol.box_multipliers[0] == pytest.approx(2.0, abs=1e-4)
    assert sol.objective == pytest.approx(1.0, abs=1e-5)


def test_equality_constraint_and_multiplier():
    problem = QpProblem(H=np.eye(2), f=[0.0, 0.0], Aeq=[[1.0, 1.0]], beq=[1.0])

    sol = solve_qp(problem)

    assert sol.solved
    np.testing.assert_allclose(sol.x_opt, [0.5, 0.5], atol=1e-6)
    np.testing.assert_allclose(sol.eq_multipliers, [-0.5], atol=1e-4)
    assert sol.primal_residual <= 1e-6


def test_general_inequality_is_respected():
    # Project (1, 1) onto x1 + x2 <= 1
    problem = QpProblem(H=2 * np.eye(2), f=[-2.0, -2.0], Ain=[[1.0, 1.0]], bin_hi=[1.0])

    sol = solve_qp(problem)

    assert sol.solved
    np.testing.assert_allclose(sol.x_opt, [0.5, 0.5], atol=1e-5)
    assert sol.ineq_multipliers[0] > 0


def test_solution_stays_inside_variable_box():
    problem = QpProblem(H=np.eye(3), f=[10.0, -10.0, 0.0], lb=[-1.0, -1.0, -1.0], ub=[1.0, 1.0, 1.0])

    sol = solve_qp(problem)

    assert np.all(sol.x_opt >= -1.0) and np.all(sol.x_opt <= 1.0)
    np.testing.assert_allclose(sol.x_opt, [-1.0, 1.0, 0.0], atol=1e-6)


# ---------- Warm start ----------


def test_warm_start_at_optimum_returns_immediately():
    problem = QpProblem(H=np.eye(2), f=[0.0, 0.0], Aeq=[[1.0, 1.0]], beq=[1.0])
    first = solve_qp(problem)

    again = solve_qp(problem, warm_start=(first.x_opt, first.y))

    assert again.solved
    assert again.iterations <= first.iterations
    np.testing.assert_allclose(again.x_opt, first.x_opt, atol=1e-6)


def test_solver_instance_reuses_factorization():
    solver = QpSolver()
    problem = QpProblem(H=np.eye(2), f=[1.0, -1.0], ub=[0.0, 0.0])

    a = solver.solve(problem)
    b = solver.solve(QpProblem(H=np.eye(2), f=[2.0, -2.0], ub=[0.0, 0.0]))

    np.testing.assert_allclose(a.x_opt, [-1.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(b.x_opt, [-2.0, 0.0], atol=1e-6)


# ---------- Failure modes ----------


def test_infeasible_problem_is_not_reported_solved():
    problem = QpProblem(
        H=np.eye(2), f=[0.0, 0.0], Aeq=[[1.0, 1.0]], beq=[1.0], lb=[0.0, 0.0], ub=[0.2, 0.2]
    )

    sol = solve_qp(problem, max_iter=2000)

    assert sol.status in (STATUS_INFEASIBLE, STATUS_MAX_ITER)
    assert sol.primal_residual > 1e-6


def test_inverted_bounds_raise():
    with pytest.raises(InvalidParameterError):
        QpProblem(H=np.eye(1), f=[0.0], lb=[1.0], ub=[0.0])


def test_wrong_hessian_shape_raises():
    with pytest.raises(InvalidParameterError, match="H must be"):
        QpProblem(H=np.eye(3), f=[0.0, 0.0])


def test_indefinite_hessian_raises_numeric_error():
    with pytest.raises(NumericError):
        solve_qp(QpProblem(H=-np.eye(2), f=[0.0, 0.0]))


def test_settings_reject_bad_relaxation():
    with pytest.raises(InvalidParameterError):
        QpSettings(alpha=2.5)
