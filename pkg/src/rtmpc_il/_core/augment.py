"""Tube sampling augmentation.

Extra states are drawn from the tube ``x_check0 + Z`` around each
demonstration step and labeled with the ancillary law.
"""

import itertools as _itertools
import logging
from dataclasses import dataclass as _dataclass
from typing import List, Optional

import numpy as _np

from .errors import InvalidParameterError, SampleSizeError
from .linmodel import MAX_VERTEX_DIM, BoxSet

logger = logging.getLogger(__name__)

__all__ = [
    "AugmentedPair",
    "sparse_samples",
    "dense_samples",
    "label_actions",
    "tube_samples",
    "SAMPLING_METHODS",
]

SAMPLING_METHODS = ("sparse", "dense")


@_dataclass(frozen=True, eq=False)
class AugmentedPair:
    """Tube sample with its ancillary label.

    Attributes:
        state_plus: Sampled state
        action_plus: ``u_check0 + K (state_plus - x_check0)``
        source_step: Demonstration step the sample belongs to
    """

    state_plus: _np.ndarray
    action_plus: _np.ndarray
    source_step: int


def _center(x_check0, z_box: BoxSet) -> _np.ndarray:
    x = _np.asarray(x_check0, dtype=float).reshape(-1)
    if x.shape != (z_box.dim,):
        raise InvalidParameterError(
            f"Dimension mismatch: tube has {z_box.dim}, state has {x.shape[0]}"
        )
    return x


def sparse_samples(x_check0, z_box: BoxSet) -> _np.ndarray:
    """Facet centers of ``x_check0 + z_box``.

    Returns:
        (2 nx, nx) array ordered axis by axis, upper facet before lower
    """
    x = _center(x_check0, z_box)
    nx = x.shape[0]
    out = _np.tile(x, (2 * nx, 1))
    idx = _np.arange(nx)
    out[2 * idx, idx] += z_box.upper
    out[2 * idx + 1, idx] += z_box.lower
    return out


def dense_samples(x_check0, z_box: BoxSet) -> _np.ndarray:
    """Vertices of ``x_check0 + z_box`` in lexicographic order, lower first.

    Raises:
        SampleSizeError: nx > 20
    """
    x = _center(x_check0, z_box)
    nx = x.shape[0]
    if nx > MAX_VERTEX_DIM:
        raise SampleSizeError(
            f"Dense sampling needs 2**{nx} states; refusing above nx = {MAX_VERTEX_DIM}"
        )
    corners = _np.array(
        list(_itertools.product(*zip(z_box.lower, z_box.upper))), dtype=float
    ).reshape(-1, nx)
    return x + corners


def label_actions(
    samples,
    u_check0,
    K,
    x_check0,
    source_step: int = 0,
    U: Optional[BoxSet] = None,
) -> List[AugmentedPair]:
    """Label tube samples with ``u_check0 + K (x - x_check0)``.

    Labels are never saturated. When ``U`` is given, labels outside it are
    counted and logged.
    """
    X = _np.atleast_2d(_np.asarray(samples, dtype=float))
    u0 = _np.asarray(u_check0, dtype=float).reshape(-1)
    K = _np.atleast_2d(_np.asarray(K, dtype=float))
    xc = _np.asarray(x_check0, dtype=float).reshape(-1)
    if K.shape != (u0.shape[0], xc.shape[0]) or X.shape[1] != xc.shape[0]:
        raise InvalidParameterError(
            f"Inconsistent dimensions: K {K.shape}, u {u0.shape}, x {xc.shape}, samples {X.shape}"
        )
    labels = u0 + (X - xc) @ K.T
    if U is not None:
        outside = int(sum(not U.contains(u) for u in labels))
        if outside:
            logger.warning(
                "%d of %d tube labels at step %d lie outside U", outside, len(labels), source_step
            )
    return [
        AugmentedPair(state_plus=X[i].copy(), action_plus=labels[i], source_step=source_step)
        for i in range(X.shape[0])
    ]


def tube_samples(method: str, x_check0, z_box: BoxSet) -> _np.ndarray:
    """Dispatch on ``sparse`` / ``dense``."""
    if method == "sparse":
        return sparse_samples(x_check0, z_box)
    if method == "dense":
        return dense_samples(x_check0, z_box)
    raise InvalidParameterError(f"Unknown sampling method '{method}'. Valid: {SAMPLING_METHODS}")


# EOF
