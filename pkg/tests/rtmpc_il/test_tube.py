"""Tests for the Monte-Carlo tube box."""

import numpy as np
import pytest

from rtmpc_il import (
    BoxSet,
    InvalidParameterError,
    NumericError,
    QuadParams,
    TubeApprox,
    disturbance_box,
    estimate_invariant_box,
    linearize_quadrotor_hover,
)
from rtmpc_il._core.tube import contains, zero_tube


@pytest.fixture
def diagonal_loop():
    """Decoupled stable loop with a unit disturbance box."""
    return np.diag([0.5, 0.8]), BoxSet.symmetric([1.0, 1.0])


# ---------- Estimation ----------


def test_tube_box_approaches_geometric_bound(diagonal_loop):
    A_K, W = diagonal_loop

    tube = estimate_invariant_box(A_K, W, n_rollouts=50, horizon=100, seed=0)

    # Repeated-vertex rollouts reach sum a^k = 1 / (1 - a)
    np.testing.assert_allclose(tube.z_box.upper, [2.0, 5.0], rtol=1e-6)
    np.testing.assert_allclose(tube.z_box.lower, -tube.z_box.upper)
    assert tube.converged


def test_tube_box_is_invariant_for_vertex_disturbances(diagonal_loop):
    A_K, W = diagonal_loop
    tube = estimate_invariant_box(A_K, W, n_rollouts=50, horizon=100, seed=0)

    for e in tube.z_box.vertices():
        for w in W.vertices():
            assert contains(tube, A_K @ e + w, inflation=1.0 + 1e-6)


def test_tube_estimate_is_reproducible_for_a_seed(diagonal_loop):
    A_K, W = diagonal_loop

    a = estimate_invariant_box(A_K, W, n_rollouts=300, horizon=30, seed=7, include_vertices=False)
    b = estimate_invariant_box(A_K, W, n_rollouts=300, horizon=30, seed=7, include_vertices=False)

    np.testing.assert_array_equal(a.z_box.upper, b.z_box.upper)


def test_zero_disturbance_gives_zero_tube(diagonal_loop):
    A_K, _ = diagonal_loop

    tube = estimate_invariant_box(A_K, BoxSet.zeros(2), n_rollouts=10, horizon=10)

    np.testing.assert_allclose(tube.z_box.upper, 0.0)
    assert tube.converged


def test_short_horizon_reports_not_converged():
    A_K = np.diag([0.99])
    W = BoxSet.symmetric([1.0])

    tube = estimate_invariant_box(A_K, W, n_rollouts=10, horizon=20)

    assert not tube.converged


def test_unsymmetrized_box_keeps_one_sided_envelope():
    W = BoxSet([0.0], [1.0])

    tube = estimate_invariant_box(np.diag([0.5]), W, n_rollouts=20, horizon=50, symmetrize=False)

    assert tube.z_box.lower[0] == 0.0
    assert tube.z_box.upper[0] == pytest.approx(2.0, rel=1e-6)


# ---------- Preconditions ----------


def test_unstable_closed_loop_raises():
    with pytest.raises(NumericError):
        estimate_invariant_box(np.diag([1.1]), BoxSet.symmetric([1.0]), n_rollouts=5, horizon=5)


def test_dimension_mismatch_raises(diagonal_loop):
    A_K, _ = diagonal_loop

    with pytest.raises(InvalidParameterError):
        estimate_invariant_box(A_K, BoxSet.symmetric([1.0]), n_rollouts=5, horizon=5)


def test_contains_rejects_inflation_below_one():
    with pytest.raises(InvalidParameterError):
        contains(zero_tube(2), np.zeros(2), inflation=0.5)


def test_tube_must_contain_origin():
    with pytest.raises(InvalidParameterError, match="origin"):
        TubeApprox(BoxSet([0.1], [1.0]), samples_used=1, horizon_used=1, seed=0)


def test_tube_dict_restores_box(diagonal_loop):
    A_K, W = diagonal_loop
    tube = estimate_invariant_box(A_K, W, n_rollouts=20, horizon=20, seed=3)

    restored = TubeApprox.from_dict(tube.to_dict())

    np.testing.assert_allclose(restored.z_box.upper, tube.z_box.upper)
    assert restored.seed == 3


# ---------- Default quadrotor tube ----------


def test_default_tube_holds_fresh_disturbance_rollouts(default_tube):
    # Arrange
    tube, lqr = default_tube
    params = QuadParams()
    A_K = lqr.closed_loop(linearize_quadrotor_hover(params, dt=0.1))
    W = disturbance_box(params, 0.3, dt=0.1)
    rng = np.random.default_rng(2024)
    errors = np.zeros((500, 8))
    inside = total = 0
    # Act
    for _ in range(200):
        errors = errors @ A_K.T + rng.uniform(W.lower, W.upper, size=errors.shape)
        inside += sum(contains(tube, e, 1.05) for e in errors)
        total += len(errors)
    # Assert
    assert tube.samples_used == 10000
    assert tube.horizon_used == 200
    assert inside / total >= 0.999
