"""Compressed policy: fully connected ReLU network trained with Adam.

Pure numpy with explicit backpropagation, so training is bitwise
reproducible for a fixed seed. Inputs and outputs are standardized with
statistics that are recorded in the checkpoint.
"""

import json as _json
import logging
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from pathlib import Path as _Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as _np

from .errors import CheckpointSchemaError, InvalidParameterError

logger = logging.getLogger(__name__)

__all__ = [
    "MlpPolicy",
    "AdamState",
    "forward",
    "gradient",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "feature_vector",
    "CHECKPOINT_SCHEMA",
    "CHECKPOINT_VERSION",
]

CHECKPOINT_SCHEMA = "rtmpc_il.policy"
CHECKPOINT_VERSION = 1
HIDDEN_SIZES = (32, 32)
STD_FLOOR = 1e-8


def feature_vector(state, window, horizon: int) -> _np.ndarray:
    """Policy input ``[state, first N window targets]``."""
    return _np.concatenate([_np.asarray(state, dtype=float).reshape(-1), window.features(horizon)])


def _standardization(data: _np.ndarray) -> Tuple[_np.ndarray, _np.ndarray]:
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std = _np.where(std < STD_FLOOR, 1.0, std)
    return mean, std


@_dataclass(eq=False)
class MlpPolicy:
    """Fully connected network with ReLU hidden layers and linear output.

    Attributes:
        layer_sizes: ``[n_in, hidden..., n_out]``
        weights: Per-layer matrices of shape (fan_in, fan_out)
        biases: Per-layer vectors of shape (fan_out,)
        input_mean: Feature means used for standardization
        input_std: Feature scales used for standardization
        output_mean: Action means used for standardization
        output_std: Action scales used for standardization
        seed: Initialization seed
        horizon: Reference window length N the features were built with
    """

    layer_sizes: Tuple[int, ...]
    weights: List[_np.ndarray]
    biases: List[_np.ndarray]
    input_mean: Optional[_np.ndarray] = None
    input_std: Optional[_np.ndarray] = None
    output_mean: Optional[_np.ndarray] = None
    output_std: Optional[_np.ndarray] = None
    seed: int = 0
    horizon: int = 0
    metadata: dict = _field(default_factory=dict)

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise InvalidParameterError(f"Invalid layer sizes {self.layer_sizes}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise InvalidParameterError("Need one weight matrix and bias per layer")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if W.shape != shape or b.shape != (shape[1],):
                raise InvalidParameterError(f"Layer {i} has shapes {W.shape}, {b.shape}; expected {shape}")

    @classmethod
    def initialize(
        cls, layer_sizes: Sequence[int], seed: int = 0, horizon: int = 0
    ) -> "MlpPolicy":
        """Uniform init in ``+-sqrt(6 / (fan_in + fan_out))``, zero biases."""
        rng = _np.random.default_rng(seed)
        sizes = tuple(int(s) for s in layer_sizes)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = _np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(_np.zeros(fan_out))
        return cls(sizes, weights, biases, seed=seed, horizon=horizon)

    @classmethod
    def for_horizon(
        cls,
        horizon: int,
        hidden: Sequence[int] = HIDDEN_SIZES,
        nx: int = 8,
        nu: int = 3,
        seed: int = 0,
    ) -> "MlpPolicy":
        """Network for ``nx + 6 N`` inputs (188 at N = 30)."""
        return cls.initialize([nx + 6 * horizon, *hidden, nu], seed=seed, horizon=horizon)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        return int(sum(W.size + b.size for W, b in zip(self.weights, self.biases)))

    @property
    def normalized(self) -> bool:
        return self.input_mean is not None

    def parameters(self) -> List[_np.ndarray]:
        """``[W0, b0, W1, b1, ...]`` (live references)."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend([W, b])
        return out

    def copy(self) -> "MlpPolicy":
        def _c(a):
            return None if a is None else a.copy()

        return MlpPolicy(
            self.layer_sizes,
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            _c(self.input_mean),
            _c(self.input_std),
            _c(self.output_mean),
            _c(self.output_std),
            self.seed,
            self.horizon,
            dict(self.metadata),
        )

    def fit_normalization(self, features: _np.ndarray, actions: _np.ndarray) -> None:
        """Set standardization statistics from data (std floored to 1)."""
        self.input_mean, self.input_std = _standardization(_np.atleast_2d(features))
        self.output_mean, self.output_std = _standardization(_np.atleast_2d(actions))

    def set_normalization(self, input_mean, input_std, output_mean, output_std) -> None:
        self.input_mean = _np.asarray(input_mean, dtype=float)
        self.input_std = _np.asarray(input_std, dtype=float)
        self.output_mean = _np.asarray(output_mean, dtype=float)
        self.output_std = _np.asarray(output_std, dtype=float)

    def normalization(self) -> Optional[tuple]:
        if not self.normalized:
            return None
        return (self.input_mean, self.input_std, self.output_mean, self.output_std)

    def normalize_inputs(self, features: _np.ndarray) -> _np.ndarray:
        if not self.normalized:
            return features
        return (features - self.input_mean) / self.input_std

    def normalize_outputs(self, actions: _np.ndarray) -> _np.ndarray:
        if not self.normalized:
            return actions
        return (actions - self.output_mean) / self.output_std

    def denormalize_outputs(self, y: _np.ndarray) -> _np.ndarray:
        if not self.normalized:
            return y
        return y * self.output_std + self.output_mean

    def predict(self, features) -> _np.ndarray:
        """Actions for raw feature rows (standardization applied)."""
        return self.denormalize_outputs(forward(self, self.normalize_inputs(_np.asarray(features, dtype=float))))

    def act(self, state, window) -> _np.ndarray:
        """Action for one state and reference window."""
        return self.predict(feature_vector(state, window, self.horizon))

    __call__ = act

    def to_dict(self) -> dict:
        def _l(a):
            return None if a is None else a.tolist()

        return {
            "schema": CHECKPOINT_SCHEMA,
            "schema_version": CHECKPOINT_VERSION,
            "layer_sizes": list(self.layer_sizes),
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "normalization": {
                "input_mean": _l(self.input_mean),
                "input_std": _l(self.input_std),
                "output_mean": _l(self.output_mean),
                "output_std": _l(self.output_std),
            },
            "seed": self.seed,
            "horizon": self.horizon,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpPolicy":
        if not isinstance(data, dict) or data.get("schema") != CHECKPOINT_SCHEMA:
            raise CheckpointSchemaError("Not a policy checkpoint")
        if data.get("schema_version") != CHECKPOINT_VERSION:
            raise CheckpointSchemaError(
                f"Unsupported checkpoint version {data.get('schema_version')}"
            )
        try:
            norm = data["normalization"]

            def _a(key):
                return None if norm.get(key) is None else _np.asarray(norm[key], dtype=float)

            policy = cls(
                tuple(data["layer_sizes"]),
                [_np.asarray(W, dtype=float).reshape(a, b) for W, a, b in zip(
                    data["weights"], data["layer_sizes"][:-1], data["layer_sizes"][1:]
                )],
                [_np.asarray(b, dtype=float) for b in data["biases"]],
                _a("input_mean"),
                _a("input_std"),
                _a("output_mean"),
                _a("output_std"),
                int(data["seed"]),
                int(data["horizon"]),
                dict(data.get("metadata") or {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointSchemaError(f"Malformed checkpoint: {e}") from e
        return policy


def forward(policy: MlpPolicy, x) -> _np.ndarray:
    """Raw network output for one vector or a batch of rows.

    Raises:
        InvalidParameterError: Wrong input length or non-finite input
    """
    x = _np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = _np.atleast_2d(x)
    if h.shape[1] != policy.n_inputs:
        raise InvalidParameterError(
            f"Input has {h.shape[1]} features, network expects {policy.n_inputs}"
        )
    if not _np.all(_np.isfinite(h)):
        raise InvalidParameterError("Network input contains non-finite values")
    last = len(policy.weights) - 1
    for i, (W, b) in enumerate(zip(policy.weights, policy.biases)):
        h = h @ W + b
        if i < last:
            h = _np.maximum(h, 0.0)
    return h[0] if single else h


def gradient(policy: MlpPolicy, X, Y) -> Tuple[float, List[_np.ndarray]]:
    """Batch loss ``mean_i ||f(x_i) - y_i||^2`` and its exact gradient.

    Operates on the raw network (no standardization).

    Returns:
        ``(loss, [dW0, db0, dW1, db1, ...])``
    """
    X = _np.atleast_2d(_np.asarray(X, dtype=float))
    Y = _np.atleast_2d(_np.asarray(Y, dtype=float))
    if X.shape[0] == 0 or X.shape[0] != Y.shape[0]:
        raise InvalidParameterError("Batch must be nonempty with matching rows")
    batch = X.shape[0]
    last = len(policy.weights) - 1

    activations = [X]
    pre = []
    h = X
    for i, (W, b) in enumerate(zip(policy.weights, policy.biases)):
        a = h @ W + b
        pre.append(a)
        h = _np.maximum(a, 0.0) if i < last else a
        activations.append(h)

    residual = h - Y
    loss = float(_np.sum(residual * residual) / batch)
    g = 2.0 * residual / batch
    grads: List[_np.ndarray] = [None] * (2 * len(policy.weights))
    for i in range(last, -1, -1):
        grads[2 * i] = activations[i].T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        if i > 0:
            g = (g @ policy.weights[i].T) * (pre[i - 1] > 0)
    return loss, grads


@_dataclass
class AdamState:
    """Adam moment accumulators mirroring the parameter list."""

    m: List[_np.ndarray]
    v: List[_np.ndarray]
    step: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Sequence[_np.ndarray], learning_rate: float = 1e-3, **kwargs) -> "AdamState":
        return cls(
            m=[_np.zeros_like(p) for p in params],
            v=[_np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
            **kwargs,
        )

    def update(self, params: Sequence[_np.ndarray], grads: Sequence[_np.ndarray]) -> None:
        """In-place Adam step with bias correction."""
        self.step += 1
        c1 = 1.0 - self.beta1**self.step
        c2 = 1.0 - self.beta2**self.step
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / c1) / (_np.sqrt(v / c2) + self.eps)


def _training_arrays(data) -> Tuple[_np.ndarray, _np.ndarray]:
    if hasattr(data, "feature_matrix"):
        return data.feature_matrix(), data.action_matrix()
    X, Y = data
    return _np.atleast_2d(_np.asarray(X, dtype=float)), _np.atleast_2d(_np.asarray(Y, dtype=float))


def train(
    policy: MlpPolicy,
    data: Union["object", Tuple[_np.ndarray, _np.ndarray]],
    epochs: int = 50,
    lr: float = 1e-3,
    batch_size: Optional[int] = 64,
    seed: int = 0,
) -> Tuple[MlpPolicy, List[float]]:
    """Fit ``policy`` to a dataset by minibatch Adam on the MSE.

    The input policy is not modified. If it carries no standardization
    statistics they are fitted on ``data`` first; the loss is measured in
    standardized action units.

    Args:
        policy: Initial network
        data: A :class:`~rtmpc_il._core.il.Dataset` or ``(features, actions)``
        epochs: Passes over the data (>= 1)
        lr: Adam learning rate
        batch_size: Minibatch size; None for full batch
        seed: Seed of the per-epoch shuffles

    Returns:
        ``(trained_policy, per_epoch_mean_loss)``
    """
    X, Y = _training_arrays(data)
    if X.shape[0] == 0:
        raise InvalidParameterError("Cannot train on an empty dataset")
    if epochs < 1:
        raise InvalidParameterError(f"epochs must be >= 1, got {epochs}")
    if lr < 0:
        raise InvalidParameterError(f"lr must be >= 0, got {lr}")
    if X.shape[1] != policy.n_inputs or Y.shape[1] != policy.n_outputs:
        raise InvalidParameterError(
            f"Data shapes {X.shape}, {Y.shape} do not fit layers {policy.layer_sizes}"
        )

    trained = policy.copy()
    if not trained.normalized:
        trained.fit_normalization(X, Y)
    Xn = trained.normalize_inputs(X)
    Yn = trained.normalize_outputs(Y)
    n = Xn.shape[0]
    size = n if batch_size is None else max(1, min(int(batch_size), n))

    rng = _np.random.default_rng(seed)
    params = trained.parameters()
    adam = AdamState.for_parameters(params, learning_rate=lr)
    losses: List[float] = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, size):
            idx = order[start : start + size]
            loss, grads = gradient(trained, Xn[idx], Yn[idx])
            adam.update(params, grads)
            total += loss * idx.shape[0]
        losses.append(total / n)
        logger.debug("epoch %d/%d loss %.6g", epoch + 1, epochs, losses[-1])
    logger.info("Trained %d epochs on %d samples, final loss %.4g", epochs, n, losses[-1])
    return trained, losses


def save_checkpoint(policy: MlpPolicy, path: Union[str, _Path]) -> _Path:
    """Write a deterministic JSON checkpoint."""
    path = _Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_json.dumps(policy.to_dict(), sort_keys=True, indent=1) + "\n")
    return path


def load_checkpoint(path: Union[str, _Path]) -> MlpPolicy:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        FileNotFoundError: Missing file
        CheckpointSchemaError: Corrupt or unknown content
    """
    path = _Path(path)
    try:
        data = _json.loads(path.read_text())
    except _json.JSONDecodeError as e:
        raise CheckpointSchemaError(f"Checkpoint {path} is not valid JSON: {e}") from e
    return MlpPolicy.from_dict(data)


# EOF
