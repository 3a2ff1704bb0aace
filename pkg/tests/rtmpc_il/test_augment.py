"""Tests for tube sampling augmentation."""

import numpy as np
import pytest

from rtmpc_il import BoxSet, InvalidParameterError, SampleSizeError, dense_samples, label_actions, sparse_samples
from rtmpc_il._core.augment import tube_samples


@pytest.fixture
def tube_box():
    return BoxSet([-0.1, -0.2, -0.3], [0.1, 0.2, 0.3])


# ---------- Sampling ----------


def test_sparse_samples_are_facet_centers(tube_box):
    center = np.array([1.0, 2.0, 3.0])

    S = sparse_samples(center, tube_box)

    assert S.shape == (6, 3)
    np.testing.assert_allclose(S[0], [1.1, 2.0, 3.0])
    np.testing.assert_allclose(S[1], [0.9, 2.0, 3.0])
    np.testing.assert_allclose(S[5], [1.0, 2.0, 2.7])
    np.testing.assert_allclose(S.mean(axis=0), center)


def test_dense_samples_are_all_vertices(tube_box):
    center = np.zeros(3)

    S = dense_samples(center, tube_box)

    assert S.shape == (8, 3)
    np.testing.assert_allclose(S[0], tube_box.lower)
    np.testing.assert_allclose(S[-1], tube_box.upper)
    assert len({tuple(row) for row in S}) == 8


def test_samples_lie_on_tube_boundary(tube_box):
    center = np.array([0.5, 0.5, 0.5])

    for S in (sparse_samples(center, tube_box), dense_samples(center, tube_box)):
        for s in S:
            assert tube_box.shifted(center).contains(s, tol=1e-12)


def test_dense_sampling_refuses_large_state():
    big = BoxSet.symmetric(np.ones(21))

    with pytest.raises(SampleSizeError):
        dense_samples(np.zeros(21), big)


def test_sample_dimension_mismatch_raises(tube_box):
    with pytest.raises(InvalidParameterError):
        sparse_samples(np.zeros(2), tube_box)


def test_unknown_sampling_method_raises(tube_box):
    with pytest.raises(InvalidParameterError, match="Unknown"):
        tube_samples("random", np.zeros(3), tube_box)


# ---------- Labels ----------


def test_labels_follow_ancillary_law():
    K = np.array([[-1.0, -2.0]])
    samples = np.array([[0.1, 0.0], [0.0, -0.1]])

    pairs = label_actions(samples, u_check0=[0.5], K=K, x_check0=[0.0, 0.0], source_step=4)

    np.testing.assert_allclose(pairs[0].action_plus, [0.4])
    np.testing.assert_allclose(pairs[1].action_plus, [0.7])
    assert all(p.source_step == 4 for p in pairs)


def test_labels_are_not_saturated():
    U = BoxSet.symmetric([0.1])

    pairs = label_actions([[1.0]], u_check0=[0.0], K=[[1.0]], x_check0=[0.0], U=U)

    np.testing.assert_allclose(pairs[0].action_plus, [1.0])


def test_label_dimension_mismatch_raises():
    with pytest.raises(InvalidParameterError, match="Inconsistent"):
        label_actions([[0.0, 0.0]], u_check0=[0.0], K=[[1.0, 1.0, 1.0]], x_check0=[0.0, 0.0])
