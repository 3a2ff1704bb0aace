"""Tests for the nominal and robust tube MPC expert."""

import numpy as np
import pytest

from rtmpc_il import (
    BoxSet,
    CostWeights,
    ExpertInfeasibleError,
    InfeasibleTighteningError,
    InvalidParameterError,
    QuadParams,
    ReferenceWindow,
    RtmpcExpert,
    TubeApprox,
    build_quadrotor_expert,
    lqr_weights,
    mpc_step,
    rtmpc_step,
)

HORIZON = 50


@pytest.fixture
def lqr_setup(double_integrator):
    """Double integrator with DARE terminal cost and wide constraints."""
    weights, lqr = lqr_weights(double_integrator, CostWeights.from_diagonals([1.0, 1.0], [1.0]))
    X = BoxSet.symmetric([100.0, 100.0])
    U = BoxSet.symmetric([100.0])
    return double_integrator, weights, lqr, X, U


def _origin_window(horizon=HORIZON):
    return ReferenceWindow.constant([0.0], [0.0], horizon)


# ---------- ReferenceWindow ----------


def test_window_state_targets_pad_with_zeros():
    window = ReferenceWindow.constant([1.0, 2.0, 3.0], [0.1, 0.2, 0.3], horizon=4)

    targets = window.state_targets(8)

    assert targets.shape == (5, 8)
    np.testing.assert_allclose(targets[0], [1, 2, 3, 0.1, 0.2, 0.3, 0, 0])


def test_window_features_flatten_first_n_points():
    window = ReferenceWindow.constant([1.0], [2.0], horizon=3)

    np.testing.assert_allclose(window.features(), [1, 2, 1, 2, 1, 2])


def test_window_rejects_single_point():
    with pytest.raises(InvalidParameterError):
        ReferenceWindow(positions=[[0.0]], velocities=[[0.0]])


# ---------- Nominal MPC ----------


def test_unconstrained_mpc_reproduces_lqr(lqr_setup):
    # Arrange
    model, weights, lqr, X, U = lqr_setup
    x = np.array([1.0, -0.5])

    # Act
    u = mpc_step(model, weights, X, U, x, _origin_window(), HORIZON)

    # Assert
    np.testing.assert_allclose(u, lqr.K @ x, atol=1e-4)


def test_nominal_mpc_rejects_state_outside_constraints(lqr_setup):
    model, weights, _lqr, _X, U = lqr_setup
    X = BoxSet.symmetric([1.0, 1.0])

    with pytest.raises(ExpertInfeasibleError):
        mpc_step(model, weights, X, U, [2.0, 0.0], _origin_window(), HORIZON)


def test_input_constraint_is_respected(lqr_setup):
    model, weights, _lqr, X, _U = lqr_setup
    U = BoxSet.symmetric([0.5])

    u = mpc_step(model, weights, X, U, [5.0, 0.0], _origin_window(), HORIZON)

    assert abs(u[0]) <= 0.5 + 1e-6


# ---------- Robust tube MPC ----------


def test_zero_tube_rtmpc_matches_nominal_mpc(lqr_setup):
    model, weights, lqr, X, U = lqr_setup
    x = np.array([0.5, 0.2])

    robust = rtmpc_step(
        model, weights, X, U, TubeApprox(BoxSet.zeros(2), 0, 0, 0), lqr.K, x, _origin_window(), HORIZON
    )
    nominal = mpc_step(model, weights, X, U, x, _origin_window(), HORIZON)

    np.testing.assert_allclose(robust.u_exec, nominal, atol=1e-4)


def test_rtmpc_applies_ancillary_law(lqr_setup):
    model, weights, lqr, X, U = lqr_setup
    tube = TubeApprox(BoxSet.symmetric([0.2, 0.2]), 10, 10, 0)
    x = np.array([1.0, 0.3])

    sol = rtmpc_step(model, weights, X, U, tube, lqr.K, x, _origin_window(), HORIZON)

    expected = sol.u_check0 + lqr.K @ (x - sol.x_check0)
    np.testing.assert_allclose(sol.u_ancillary, expected)
    assert tube.z_box.contains(x - sol.x_check0, tol=1e-6)
    assert not sol.saturated


def test_rtmpc_plan_respects_tightened_sets(lqr_setup):
    model, weights, lqr, _X, _U = lqr_setup
    X = BoxSet.symmetric([3.0, 1.0])
    U = BoxSet.symmetric([2.0])
    tube = TubeApprox(BoxSet.symmetric([0.1, 0.1]), 10, 10, 0)
    expert = RtmpcExpert(model, weights, X, U, tube=tube, K=lqr.K, horizon=20)

    sol = expert.solve([2.5, 0.0], _origin_window(20))

    for state in sol.predicted_states:
        assert expert.X_tight.contains(state, tol=1e-5)
    for u in sol.predicted_inputs:
        assert expert.U_tight.contains(u, tol=1e-5)


def test_tube_wider_than_constraints_raises(lqr_setup):
    model, weights, lqr, _X, U = lqr_setup
    X = BoxSet.symmetric([0.1, 0.1])
    tube = TubeApprox(BoxSet.symmetric([0.5, 0.05]), 10, 10, 0)

    with pytest.raises(InfeasibleTighteningError) as excinfo:
        RtmpcExpert(model, weights, X, U, tube=tube, K=lqr.K, horizon=10)

    assert excinfo.value.dimension == 0


def test_window_horizon_mismatch_raises(lqr_setup):
    model, weights, lqr, X, U = lqr_setup
    expert = RtmpcExpert(model, weights, X, U, K=lqr.K, horizon=10)

    with pytest.raises(InvalidParameterError, match="horizon"):
        expert.solve([0.0, 0.0], _origin_window(5))


def test_label_uses_ancillary_gain(lqr_setup):
    model, weights, lqr, X, U = lqr_setup
    expert = RtmpcExpert(model, weights, X, U, tube=TubeApprox(BoxSet.symmetric([0.1, 0.1]), 1, 1, 0), K=lqr.K, horizon=10)
    sol = expert.solve([0.3, 0.0], _origin_window(10))
    samples = np.array([[0.4, 0.0], [0.3, 0.1]])

    labels = expert.label(samples, sol)

    np.testing.assert_allclose(labels, sol.u_check0 + (samples - sol.x_check0) @ lqr.K.T)


# ---------- Quadrotor expert ----------


def test_quadrotor_expert_holds_hover(small_expert):
    window = ReferenceWindow.constant([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], small_expert.horizon)
    state = np.zeros(8)
    state[2] = 1.0

    u = small_expert(state, window)

    np.testing.assert_allclose(u, small_expert.model.u_trim, atol=1e-3)
    assert small_expert.latencies_ms


def test_quadrotor_expert_records_lqr_and_disturbance(small_expert):
    assert small_expert.lqr is not None
    assert small_expert.disturbance_set.dim == 8
    assert small_expert.U_tight.is_subset_of(small_expert.U)
    assert small_expert.X_tight.is_subset_of(small_expert.X)


def test_default_quadrotor_expert_has_nonempty_tightened_sets():
    # Arrange
    params = QuadParams()
    # Act
    expert = build_quadrotor_expert(params)
    # Assert
    np.testing.assert_allclose(expert.disturbance_set.upper[3:6], 0.3 * params.gravity * 0.1)
    assert expert.tube.samples_used == 10000
    assert np.all(expert.U_tight.lower < expert.U_tight.upper)
    assert np.all(expert.X_tight.lower < expert.X_tight.upper)
    # Some tilt authority is left for the nominal plan
    assert np.all(expert.U_tight.upper[1:] > 0.05)
    assert np.all(expert.X_tight.upper[6:] > 0.3)
