"""Error vocabulary for rtmpc_il.

Every error subclasses a builtin, so callers may catch either the
precise class or the builtin it specializes.
"""

from typing import Optional

import numpy as _np

__all__ = [
    "InvalidParameterError",
    "InfeasibleTighteningError",
    "NonConvergenceError",
    "NumericError",
    "ExpertInfeasibleError",
    "SampleSizeError",
    "OutOfDistributionError",
    "CheckpointSchemaError",
    "ConfigError",
]


class InvalidParameterError(ValueError):
    """A precondition on an argument does not hold."""


class InfeasibleTighteningError(InvalidParameterError):
    """Constraint tightening produced an empty box.

    Attributes:
        dimension: Index of the first empty axis
        dimension_name: Human-readable axis name, if known
    """

    def __init__(
        self, dimension: int, dimension_name: Optional[str] = None, detail: str = ""
    ):
        self.dimension = dimension
        self.dimension_name = dimension_name
        label = f"{dimension} ({dimension_name})" if dimension_name else f"{dimension}"
        msg = f"Tightened set is empty along dimension {label}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NonConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap."""

    def __init__(self, what: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"{what} did not converge after {iterations} iterations "
            f"(last residual {residual:.3e})"
        )


class NumericError(ArithmeticError):
    """Singular or unstable matrices."""


class ExpertInfeasibleError(RuntimeError):
    """The MPC expert could not produce an action at the given state."""

    def __init__(self, message: str, state: Optional[_np.ndarray] = None):
        self.state = None if state is None else _np.asarray(state, dtype=float).copy()
        super().__init__(message)


class SampleSizeError(InvalidParameterError):
    """Requested sample set would be exponentially large."""


class OutOfDistributionError(InvalidParameterError):
    """Reference parameters fall outside their admissible ranges."""


class CheckpointSchemaError(ValueError):
    """A checkpoint or artifact file is corrupt or has an unknown schema."""


class ConfigError(ValueError):
    """Run configuration is missing, malformed or inconsistent."""


# EOF
