"""Tests for the nonlinear quadrotor simulator and reference generators."""

import numpy as np
import pytest

from rtmpc_il import (
    DisturbanceSpec,
    ExpertInfeasibleError,
    InvalidParameterError,
    OutOfDistributionError,
    QuadParams,
    ReferenceDistribution,
    make_reference,
    rollout,
    sample_reference,
)
from rtmpc_il._core.quadsim import sample_initial_state, step


@pytest.fixture
def params():
    return QuadParams()


def _hover(params):
    return lambda state, window: params.hover_input


# ---------- Dynamics ----------


def test_hover_is_an_equilibrium_of_the_plant(params):
    x = np.zeros(8)
    x[2] = 1.5

    nxt = step(x, params.hover_input, np.zeros(3), params, dt=0.1)

    np.testing.assert_allclose(nxt, x, atol=1e-12)


def test_step_saturates_the_action(params):
    x = np.zeros(8)
    x[2] = 1.5
    too_much = np.array([10 * params.weight, 2.0, -2.0])

    a = step(x, too_much, np.zeros(3), params, dt=0.1)
    b = step(x, params.input_box().clip(too_much), np.zeros(3), params, dt=0.1)

    np.testing.assert_array_equal(a, b)


def test_pitch_accelerates_forward(params):
    x = np.zeros(8)
    x[2] = 1.5
    x[7] = 0.2

    nxt = step(x, params.hover_input + [0.0, 0.0, 0.2], np.zeros(3), params, dt=0.1)

    assert nxt[3] > 0


def test_params_reject_nonpositive_mass():
    with pytest.raises(InvalidParameterError, match="mass"):
        QuadParams(mass=0.0)


# ---------- References ----------


def test_lemniscate_has_expected_length_and_peak_speed(params):
    ref = make_reference("lemniscate", radius=1.5, speed=1.5, duration=7.0, dt=0.1)

    speeds = np.linalg.norm(ref.velocities, axis=1)

    assert ref.positions.shape == (71, 3)
    assert speeds.max() <= 1.5 + 1e-9
    assert speeds.max() == pytest.approx(1.5, rel=0.02)


def test_circle_stays_on_its_radius():
    ref = make_reference("circle", radius=1.0, speed=1.0, center=(0.0, 0.0, 1.5), duration=3.0)

    r = np.linalg.norm(ref.positions[:, :2], axis=1)

    np.testing.assert_allclose(r, 1.0)
    np.testing.assert_allclose(ref.positions[:, 2], 1.5)


def test_reference_velocities_match_position_differences():
    ref = make_reference("circle", radius=1.0, speed=1.0, duration=3.0, dt=0.01)

    fd = np.diff(ref.positions, axis=0) / ref.dt
    mid = 0.5 * (ref.velocities[1:] + ref.velocities[:-1])

    np.testing.assert_allclose(fd, mid, atol=1e-4)


def test_step_reference_starts_at_center():
    ref = make_reference("step", radius=1.0, center=(0.0, 0.0, 1.0), duration=2.0)

    np.testing.assert_allclose(ref.start_position, [0.0, 0.0, 1.0])
    np.testing.assert_allclose(ref.positions[0], [1.0, 0.0, 1.0])


def test_window_holds_the_final_point():
    ref = make_reference("circle", radius=1.0, speed=1.0, duration=1.0)

    window = ref.window(ref.n_steps - 1, horizon=5)

    assert window.horizon == 5
    np.testing.assert_allclose(window.positions[-1], ref.positions[-1])
    np.testing.assert_allclose(window.positions[1], ref.positions[-1])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "spiral"},
        {"kind": "circle", "radius": 10.0},
        {"kind": "circle", "speed": 9.0},
        {"kind": "circle", "duration": 0.25},
        {"kind": "step", "center": (0.0, 0.0, 4.5)},
    ],
)
def test_out_of_distribution_references_raise(kwargs):
    with pytest.raises(OutOfDistributionError):
        make_reference(**kwargs)


def test_sampled_references_are_reproducible():
    dist = ReferenceDistribution(duration=2.0)

    a = sample_reference(np.random.default_rng(3), dist)
    b = sample_reference(np.random.default_rng(3), dist)

    assert a.kind == b.kind
    np.testing.assert_array_equal(a.positions, b.positions)


def test_initial_state_spread_is_bounded(rng):
    ref = make_reference("step", radius=0.0, duration=1.0)

    x0 = sample_initial_state(ref, rng, position_spread=0.1, velocity_spread=0.05)

    assert np.all(np.abs(x0[0:3] - ref.start_position) <= 0.1)
    assert np.all(np.abs(x0[3:6]) <= 0.05)
    np.testing.assert_array_equal(x0[6:8], 0.0)


# ---------- Disturbances ----------


def test_unknown_disturbance_mode_raises():
    with pytest.raises(InvalidParameterError):
        DisturbanceSpec(mode="gusty")


def test_uniform_forces_stay_in_box(params, rng):
    spec = DisturbanceSpec(mode="uniform_random", magnitude_fraction=0.2)

    forces = spec.draw_forces(params, 100, rng)

    assert forces.shape == (100, 3)
    assert np.all(np.abs(forces) <= 0.2 * params.weight)


def test_adversarial_force_is_constant_within_band(params, rng):
    spec = DisturbanceSpec(mode="adversarial_constant", magnitude_fraction=0.3, band=0.05)

    forces = spec.draw_forces(params, 20, rng)

    norms = np.linalg.norm(forces, axis=1)
    np.testing.assert_allclose(forces, np.tile(forces[0], (20, 1)))
    assert 0.25 * params.weight - 1e-9 <= norms[0] <= 0.3 * params.weight + 1e-9


def test_drag_mismatch_changes_plant_drag_only(params, rng):
    spec = DisturbanceSpec(mode="drag_mismatch", eval_drag=0.4)

    assert spec.plant_drag(params) == 0.4
    assert DisturbanceSpec().plant_drag(params) == params.drag
    np.testing.assert_array_equal(spec.draw_forces(params, 3, rng), 0.0)


# ---------- Rollout ----------


def test_hover_rollout_has_zero_cost(params):
    ref = make_reference("step", radius=0.0, duration=2.0)

    ep = rollout(_hover(params), ref, DisturbanceSpec(), params, seed=0, horizon=5)

    assert ep.success
    assert ep.n_steps == 20
    assert ep.states.shape == (21, 8)
    assert ep.total_cost == pytest.approx(0.0, abs=1e-12)


def test_rollout_stops_at_first_violation(params):
    ref = make_reference("step", radius=0.0, duration=2.0)
    falling = lambda state, window: np.array([0.0, 0.0, 0.0])  # noqa: E731

    ep = rollout(falling, ref, DisturbanceSpec(), params, seed=0, horizon=5)

    assert ep.violated
    assert "state constraint violated" in ep.failure_reason
    assert ep.n_steps < 20


def test_rollout_marks_expert_infeasibility(params):
    ref = make_reference("step", radius=0.0, duration=1.0)

    def infeasible(state, window):
        raise ExpertInfeasibleError("no solution", state)

    ep = rollout(infeasible, ref, DisturbanceSpec(), params, seed=0, horizon=5)

    assert ep.violated
    assert ep.n_steps == 0
    assert "expert infeasible" in ep.failure_reason


def test_rollout_calls_reset_and_on_step(params):
    class Recorder:
        resets = 0

        def reset(self):
            self.resets += 1

        def __call__(self, state, window):
            return params.hover_input

    ctrl = Recorder()
    seen = []
    ref = make_reference("step", radius=0.0, duration=0.5)

    rollout(ctrl, ref, DisturbanceSpec(), params, seed=0, horizon=3, on_step=lambda t, *_: seen.append(t))

    assert ctrl.resets == 1
    assert seen == [0, 1, 2, 3, 4]


def test_rollout_disturbances_are_seeded(params):
    ref = make_reference("step", radius=0.0, duration=1.0)
    spec = DisturbanceSpec(mode="uniform_random", magnitude_fraction=0.1, seed=2)

    a = rollout(_hover(params), ref, spec, params, seed=5, horizon=3)
    b = rollout(_hover(params), ref, spec, params, seed=5, horizon=3)
    c = rollout(_hover(params), ref, spec, params, seed=6, horizon=3)

    np.testing.assert_array_equal(a.disturbances, b.disturbances)
    assert not np.array_equal(a.disturbances, c.disturbances)


def test_episode_rows_carry_state_action_and_reference(params):
    ref = make_reference("step", radius=0.0, duration=0.3)
    ep = rollout(_hover(params), ref, DisturbanceSpec(), params, seed=0, horizon=3)

    rows = ep.rows()

    assert len(rows) == 3
    assert {"t", "px", "thrust", "ref_pz", "wx", "stage_cost"} <= set(rows[0])
    assert rows[1]["t"] == pytest.approx(0.1)
