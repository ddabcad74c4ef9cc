"""Feed-forward multilayer perceptron with bias stored as weight column 0.

Each layer ``l`` owns a matrix ``W[l]`` of shape ``(n_l, n_{l-1} + 1)``. Row
``j`` feeds receiving neuron ``j``; column 0 multiplies a constant +1 source
and columns ``1..n_{l-1}`` multiply the previous layer's outputs. All forward
routines accept either a single sample of shape ``(n_in,)`` or a batch of
shape ``(N, n_in)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError, ShapeError


class Activation(str, Enum):
    TANSIG = "tansig"
    LOGSIG = "logsig"
    LINEAR = "linear"

    @classmethod
    def parse(cls, value) -> "Activation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"unknown activation {value!r}") from None


def _phi(kind: Activation, v):
    if kind is Activation.TANSIG:
        return np.tanh(v)
    if kind is Activation.LOGSIG:
        return expit(v)
    return v


def _dphi(kind: Activation, y):
    # derivative expressed through the neuron output y = phi(v)
    if kind is Activation.TANSIG:
        return 1.0 - y * y
    if kind is Activation.LOGSIG:
        return y * (1.0 - y)
    return np.ones_like(y)


def _check_finite(v, what="value"):
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"non-finite {what}")


def activation(kind, v):
    """Apply an activation function to a scalar or array.

    >>> activation("logsig", 0.0)
    0.5
    """
    kind = Activation.parse(kind)
    _check_finite(v, "activation input")
    out = _phi(kind, np.asarray(v, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def activation_derivative(kind, v, y):
    """Derivative of ``activation(kind, v)`` evaluated through its output ``y``."""
    kind = Activation.parse(kind)
    _check_finite(v, "activation input")
    _check_finite(y, "activation output")
    out = _dphi(kind, np.asarray(y, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class NetworkConfig:
    """Layer layout of a network.

    Args:
        input_count: number of network inputs.
        hidden_layers: sequence of ``(neuron_count, activation)`` pairs.
        output_count: number of output neurons.
        output_activation: activation of the output layer.
    """

    input_count: int
    hidden_layers: tuple
    output_count: int = 1
    output_activation: Activation = Activation.LINEAR

    def __post_init__(self):
        layers = tuple((int(n), Activation.parse(a)) for n, a in self.hidden_layers)
        object.__setattr__(self, "hidden_layers", layers)
        object.__setattr__(self, "output_activation", Activation.parse(self.output_activation))
        if int(self.input_count) < 1 or int(self.output_count) < 1:
            raise InvalidInputError("input_count and output_count must be positive")
        object.__setattr__(self, "input_count", int(self.input_count))
        object.__setattr__(self, "output_count", int(self.output_count))
        if not layers:
            raise InvalidInputError("at least one hidden layer is required")
        for n, act in layers:
            if n < 1:
                raise InvalidInputError("hidden layer neuron counts must be positive")
            if act is Activation.LINEAR:
                raise InvalidInputError("hidden layers may not use the linear activation")

    @property
    def layer_sizes(self) -> tuple:
        """Neuron counts from the input layer through the output layer."""
        return (self.input_count, *(n for n, _ in self.hidden_layers), self.output_count)

    @property
    def activations(self) -> tuple:
        return (*(a for _, a in self.hidden_layers), self.output_activation)

    @property
    def weight_shapes(self) -> list:
        sizes = self.layer_sizes
        return [(sizes[l + 1], sizes[l] + 1) for l in range(len(sizes) - 1)]

    @property
    def n_weights(self) -> int:
        return sum(r * c for r, c in self.weight_shapes)

    def describe(self) -> str:
        hidden = "-".join(f"{n}{a.value}" for n, a in self.hidden_layers)
        return f"{self.input_count}-[{hidden}]-{self.output_count}{self.output_activation.value}"

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "hidden_layers": [[n, a.value] for n, a in self.hidden_layers],
            "output_count": self.output_count,
            "output_activation": self.output_activation.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            input_count=d["input_count"],
            hidden_layers=tuple(tuple(layer) for layer in d["hidden_layers"]),
            output_count=d.get("output_count", 1),
            output_activation=d.get("output_activation", "linear"),
        )


@dataclass(frozen=True, eq=False)
class Network:
    """A configured network and its weights. Weight arrays are read-only."""

    config: NetworkConfig
    weights: tuple

    def __post_init__(self):
        shapes = self.config.weight_shapes
        if len(self.weights) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} weight matrices, got {len(self.weights)}")
        frozen = []
        for l, (w, shape) in enumerate(zip(self.weights, shapes)):
            w = np.array(w, dtype=float)
            if w.shape != shape:
                raise ShapeError(f"layer {l + 1}: weight shape {w.shape} != {shape}")
            if not np.all(np.isfinite(w)):
                raise InvalidInputError(f"layer {l + 1}: non-finite weights")
            w.flags.writeable = False
            frozen.append(w)
        object.__setattr__(self, "weights", tuple(frozen))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.config == other.config and all(
            np.array_equal(a, b) for a, b in zip(self.weights, other.weights)
        )

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def flat(self) -> np.ndarray:
        """All weights concatenated layer by layer, row-major within a layer."""
        return np.concatenate([w.ravel() for w in self.weights])

    @classmethod
    def from_flat(cls, config: NetworkConfig, vector) -> "Network":
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (config.n_weights,):
            raise ShapeError(f"expected {config.n_weights} weights, got shape {vector.shape}")
        return cls(config, tuple(unflatten(config, vector)))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "weights": [w.tolist() for w in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        return cls(NetworkConfig.from_dict(d["config"]), tuple(np.array(w, dtype=float) for w in d["weights"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_dict(json.loads(Path(path).read_text()))


def unflatten(config: NetworkConfig, vector: np.ndarray) -> list:
    mats, start = [], 0
    for shape in config.weight_shapes:
        size = shape[0] * shape[1]
        mats.append(vector[start:start + size].reshape(shape))
        start += size
    return mats


def init_weights(config: NetworkConfig, seed) -> Network:
    """Draw every weight uniformly on +-1/sqrt(fan_in + 1).

    ``seed`` is anything :func:`numpy.random.default_rng` accepts: an int, a
    sequence of ints, or a SeedSequence.
    """
    rng = np.random.default_rng(seed)
    mats = []
    for rows, cols in config.weight_shapes:
        bound = 1.0 / math.sqrt(cols)  # cols == fan_in + 1
        mats.append(rng.uniform(-bound, bound, size=(rows, cols)))
    return Network(config, tuple(mats))


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Everything a backward pass needs.

    Attributes:
        fields: induced local fields ``v^l`` for layers 1..L.
        outputs: layer outputs ``y^l`` for layers 0..L, each with the constant
            bias slot prepended (index 0 along the last axis is always 1).
    """

    fields: tuple
    outputs: tuple = field(repr=False)

    @property
    def output(self) -> np.ndarray:
        return self.outputs[-1][..., 1:]


def _augment(y):
    ones = np.ones(y.shape[:-1] + (1,))
    return np.concatenate([ones, y], axis=-1)


def _as_inputs(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != net.config.input_count:
        raise ShapeError(f"input shape {x.shape} does not match input_count={net.config.input_count}")
    _check_finite(x, "network input")
    return x


def _forward(weights, activations, x):
    y = _augment(x)
    fields, outputs = [], [y]
    for w, act in zip(weights, activations):
        v = y @ w.T
        y = _augment(_phi(act, v))
        fields.append(v)
        outputs.append(y)
    return fields, outputs


def forward(net: Network, x) -> ForwardTrace:
    """Propagate ``x`` left to right, recording fields and outputs of each layer."""
    x = _as_inputs(net, x)
    fields, outputs = _forward(net.weights, net.config.activations, x)
    return ForwardTrace(tuple(fields), tuple(outputs))


def predict(net: Network, x):
    """Network output without a retained trace.

    Returns a float for a single sample (first output neuron) and an array of
    shape ``(N,)`` for a batch.
    """
    x = _as_inputs(net, x)
    _, outputs = _forward(net.weights, net.config.activations, x)
    out = outputs[-1][..., 1]
    return float(out) if x.ndim == 1 else out
