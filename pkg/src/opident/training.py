"""Backward pass, momentum and Levenberg-Marquardt trainers, and RMSE.

Sign convention: the error is ``e = d - o`` and the delta of an output
neuron is ``e * phi'(v)``. The gradient of the per-sample loss ``0.5 * e**2``
with respect to ``w_ji`` is therefore ``-delta_j * y_i``, and both trainers
move weights along ``+delta * y``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.linalg.blas import dsyrk

from .errors import InvalidInputError, NumericalFailure, ShapeError
from .mlp import Network, NetworkConfig, _dphi, _forward, forward, init_weights, unflatten


@dataclass(frozen=True)
class MomentumParams:
    """Pattern-mode gradient descent with momentum.

    Attributes:
        eta: learning rate.
        alpha: momentum constant, multiplies the previous weight change.
        max_epochs: passes over the training set.
        loss_tolerance: stop once the epoch MSE changes by less than this.
    """

    eta: float = 0.05
    alpha: float = 0.9
    max_epochs: int = 500
    loss_tolerance: float = 1e-9

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidInputError("eta must be > 0")
        if not 0 <= self.alpha < 1:
            raise InvalidInputError("alpha must lie in [0, 1)")
        if self.max_epochs < 0 or self.loss_tolerance < 0:
            raise InvalidInputError("max_epochs and loss_tolerance must be non-negative")


@dataclass(frozen=True)
class LmParams:
    """Batch Levenberg-Marquardt settings.

    ``lambda`` is multiplied by ``lambda_increase`` after a rejected step and
    by ``lambda_decrease`` after an accepted one; training stops once it
    exceeds ``max_lambda``.
    """

    lambda0: float = 1e-3
    lambda_increase: float = 10.0
    lambda_decrease: float = 0.1
    max_epochs: int = 200
    loss_tolerance: float = 1e-12
    max_lambda: float = 1e10
    min_lambda: float = 1e-15

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise InvalidInputError("lambda0 must be > 0")
        if not self.lambda_increase > 1:
            raise InvalidInputError("lambda_increase must be > 1")
        if not 0 < self.lambda_decrease < 1:
            raise InvalidInputError("lambda_decrease must lie in (0, 1)")
        if self.max_epochs < 0 or self.loss_tolerance < 0:
            raise InvalidInputError("max_epochs and loss_tolerance must be non-negative")
        if not self.max_lambda > self.lambda0:
            raise InvalidInputError("max_lambda must exceed lambda0")


@dataclass(frozen=True, eq=False)
class TrainResult:
    network: Network
    epochs_run: int
    epoch_losses: tuple
    final_rmse: float
    seed: object
    trainer: str
    stop_reason: str
    initial_loss: float = field(default=math.nan)

    def to_dict(self) -> dict:
        return {
            "trainer": self.trainer,
            "config": self.network.config.to_dict(),
            "seed": _seed_json(self.seed),
            "epochs_run": self.epochs_run,
            "stop_reason": self.stop_reason,
            "initial_loss": self.initial_loss,
            "epoch_losses": list(self.epoch_losses),
            "final_rmse": self.final_rmse,
            "network": self.network.to_dict(),
        }


def _seed_json(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return None if seed is None else int(seed)


def rmse(predictions, targets) -> float:
    """Root-mean-square difference between two equal-length sequences."""
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if p.size == 0 or p.size != t.size:
        raise InvalidInputError(f"rmse needs equal non-zero lengths, got {p.size} and {t.size}")
    d = p - t
    return math.sqrt(float(np.dot(d, d)) / d.size)


def _backprop(weights, activations, outputs, err):
    # deltas for layers 1..L given the error at the output layer
    deltas = [None] * len(weights)
    deltas[-1] = err * _dphi(activations[-1], outputs[-1][..., 1:])
    for l in range(len(weights) - 2, -1, -1):
        back = deltas[l + 1] @ weights[l + 1][:, 1:]  # bias column does not propagate
        deltas[l] = _dphi(activations[l], outputs[l + 1][..., 1:]) * back
    return deltas


def compute_deltas(net: Network, trace, target) -> tuple:
    """Local gradients of every neuron for the sample that produced ``trace``.

    ``target`` has one entry per output neuron (or shape ``(N, outputs)``
    for a batch trace).
    """
    if len(trace.fields) != net.n_layers:
        raise ShapeError("trace does not belong to this network")
    for v, (rows, _) in zip(trace.fields, net.config.weight_shapes):
        if v.shape[-1] != rows:
            raise ShapeError("trace does not belong to this network")
    target = np.asarray(target, dtype=float)
    out = trace.output
    if target.ndim == 0:
        target = target.reshape(1)
    if target.shape != out.shape:
        raise ShapeError(f"target shape {target.shape} does not match output shape {out.shape}")
    return tuple(_backprop(net.weights, net.config.activations, trace.outputs, target - out))


def gradient_from_deltas(trace, deltas) -> list:
    """Gradient of the summed ``0.5 * e**2`` loss: ``-delta_j * y_i`` per weight."""
    grads = []
    for l, delta in enumerate(deltas):
        y = trace.outputs[l]
        if delta.ndim == 1:
            grads.append(-np.outer(delta, y))
        else:
            grads.append(-(delta.T @ y))
    return grads


def analytic_gradient(net: Network, x, target) -> list:
    trace = forward(net, x)
    return gradient_from_deltas(trace, compute_deltas(net, trace, target))


def finite_difference_gradient(net: Network, x, target, h: float = 1e-6) -> list:
    """Central-difference gradient of ``0.5 * sum(e**2)`` for each weight."""
    if not h > 0:
        raise InvalidInputError("h must be > 0")
    config = net.config
    target = np.asarray(target, dtype=float)
    base = net.flat()
    x = np.asarray(x, dtype=float)

    def loss(vec):
        _, outputs = _forward(unflatten(config, vec), config.activations, x)
        e = target.reshape(outputs[-1][..., 1:].shape) - outputs[-1][..., 1:]
        return 0.5 * float(np.sum(e * e))

    grad = np.empty_like(base)
    for k in range(base.size):
        plus, minus = base.copy(), base.copy()
        plus[k] += h
        minus[k] -= h
        grad[k] = (loss(plus) - loss(minus)) / (2.0 * h)
    return [g.copy() for g in unflatten(config, grad)]


def momentum_step(net: Network, deltas, trace, prev_updates, params: MomentumParams):
    """Apply ``dw = alpha * dw_prev + eta * delta_j * y_i`` to every layer.

    Returns the updated network and the increments that were applied.
    """
    if len(prev_updates) != net.n_layers:
        raise ShapeError("prev_updates must have one array per layer")
    new_weights, updates = [], []
    for l, w in enumerate(net.weights):
        prev = np.asarray(prev_updates[l], dtype=float)
        if prev.shape != w.shape:
            raise ShapeError(f"layer {l + 1}: prev update shape {prev.shape} != {w.shape}")
        upd = params.alpha * prev + params.eta * np.outer(deltas[l], trace.outputs[l])
        new_weights.append(w + upd)
        updates.append(upd)
    return Network(net.config, tuple(new_weights)), updates


def zero_updates(net_or_config) -> list:
    config = net_or_config.config if isinstance(net_or_config, Network) else net_or_config
    return [np.zeros(shape) for shape in config.weight_shapes]


def sample_order_rng(seed) -> np.random.Generator:
    """Generator for the per-epoch sample shuffles, independent of weight init."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])


def _arrays(dataset, config: NetworkConfig):
    x = np.asarray(dataset.inputs, dtype=float)
    d = np.asarray(dataset.targets, dtype=float).reshape(-1, 1)
    if x.shape[0] == 0:
        raise InvalidInputError("training dataset is empty")
    if x.shape[1] != config.input_count:
        raise ShapeError(f"dataset arity {x.shape[1]} != network input_count {config.input_count}")
    if config.output_count != 1:
        raise InvalidInputError("trainers support single-output networks only")
    return x, d


def _mse(weights, activations, x, d) -> float:
    _, outputs = _forward(weights, activations, x)
    e = d - outputs[-1][:, 1:]
    return float(np.mean(e * e))


def _start(config, seed, init):
    if init is None:
        return init_weights(config, seed)
    if init.config != config:
        raise InvalidInputError("initial network does not match config")
    return init


def train_momentum(config: NetworkConfig, dataset, params: MomentumParams = MomentumParams(),
                   seed=0, init: Network | None = None) -> TrainResult:
    """Pattern-mode backpropagation with momentum.

    Each epoch visits every sample once in an order drawn from ``seed``, and
    updates the weights after each sample. The recorded epoch loss is the
    full-set MSE after the epoch.
    """
    x, d = _arrays(dataset, config)
    net0 = _start(config, seed, init)
    acts = config.activations
    weights = [w.copy() for w in net0.weights]
    prev = zero_updates(config)
    rng = sample_order_rng(seed)
    eta, alpha = params.eta, params.alpha

    loss_prev = initial = _mse(weights, acts, x, d)
    losses = []
    reason = "max_epochs"
    for _ in range(params.max_epochs):
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
            for n in rng.permutation(x.shape[0]):
                _, outputs = _forward(weights, acts, x[n])
                deltas = _backprop(weights, acts, outputs, d[n] - outputs[-1][1:])
                for l in range(len(weights)):
                    upd = alpha * prev[l] + eta * np.outer(deltas[l], outputs[l])
                    weights[l] += upd
                    prev[l] = upd
            loss = _mse(weights, acts, x, d)
        if not math.isfinite(loss):
            raise NumericalFailure("momentum training diverged")
        losses.append(loss)
        if abs(loss_prev - loss) < params.loss_tolerance:
            reason = "loss_tolerance"
            break
        loss_prev = loss

    net = Network(config, tuple(weights))
    final = math.sqrt(losses[-1]) if losses else math.sqrt(initial)
    return TrainResult(net, len(losses), tuple(losses), final, seed, "momentum", reason, initial)


def _jacobian(weights, activations, outputs):
    # d(output)/d(w) for every sample, columns ordered like Network.flat()
    sens = _backprop(weights, activations, outputs, np.ones_like(outputs[-1][:, 1:]))
    n = outputs[0].shape[0]
    blocks = [(s[:, :, None] * outputs[l][:, None, :]).reshape(n, -1) for l, s in enumerate(sens)]
    return np.hstack(blocks)


def jacobian(net: Network, x) -> np.ndarray:
    """Jacobian of the network output with respect to the flat weight vector."""
    trace = forward(net, np.atleast_2d(x))
    return _jacobian(net.weights, net.config.activations, trace.outputs)


def train_levenberg_marquardt(config: NetworkConfig, dataset, params: LmParams = LmParams(),
                              seed=0, init: Network | None = None) -> TrainResult:
    """Batch Levenberg-Marquardt on the summed squared error.

    Each epoch solves ``(J^T J + lambda I) dw = J^T e``, retrying with larger
    damping until the step lowers the MSE. Raises NumericalFailure when the
    damped system stays singular all the way up to ``max_lambda``.
    """
    x, d = _arrays(dataset, config)
    net0 = _start(config, seed, init)
    acts = config.activations
    w = net0.flat().copy()
    nw = w.size

    _, outputs = _forward(unflatten(config, w), acts, x)
    e = (d - outputs[-1][:, 1:]).ravel()
    loss = initial = float(np.mean(e * e))
    lam = params.lambda0
    losses = []
    reason = "max_epochs"
    if loss == 0.0:
        reason = "zero_residual"
    else:
        for _ in range(params.max_epochs):
            jac = _jacobian(unflatten(config, w), acts, outputs)
            grad = jac.T @ e
            jtj = dsyrk(1.0, jac.T, trans=0)  # upper triangle of J^T J
            accepted = False
            all_singular = True
            while True:
                damped = jtj.copy()
                damped.flat[:: nw + 1] += lam
                try:
                    step = cho_solve(cho_factor(damped, lower=False, check_finite=False, overwrite_a=True),
                                     grad, check_finite=False)
                    all_singular = False
                except LinAlgError:
                    step = None
                if step is not None and np.all(np.isfinite(step)):
                    w_new = w + step
                    _, out_new = _forward(unflatten(config, w_new), acts, x)
                    e_new = (d - out_new[-1][:, 1:]).ravel()
                    loss_new = float(np.mean(e_new * e_new))
                    if math.isfinite(loss_new) and loss_new < loss:
                        accepted = True
                        break
                lam *= params.lambda_increase
                if lam > params.max_lambda:
                    break
            if not accepted:
                if all_singular:
                    raise NumericalFailure("damped normal equations singular up to max_lambda")
                reason = "max_lambda"
                break
            lam = max(lam * params.lambda_decrease, params.min_lambda)
            improvement = loss - loss_new
            w, outputs, e, loss = w_new, out_new, e_new, loss_new
            losses.append(loss)
            if loss == 0.0:
                reason = "zero_residual"
                break
            if improvement < params.loss_tolerance:
                reason = "loss_tolerance"
                break

    net = Network.from_flat(config, w)
    final = math.sqrt(losses[-1]) if losses else math.sqrt(initial)
    return TrainResult(net, len(losses), tuple(losses), final, seed, "lm", reason, initial)


TRAINERS = {"momentum": (train_momentum, MomentumParams), "lm": (train_levenberg_marquardt, LmParams)}


def default_params(trainer: str):
    try:
        return TRAINERS[trainer][1]()
    except KeyError:
        raise InvalidInputError(f"unknown trainer {trainer!r}; choose from {sorted(TRAINERS)}") from None


def train(config: NetworkConfig, dataset, trainer: str = "lm", params=None, seed=0) -> TrainResult:
    """Dispatch to the named trainer with its default parameters when none are given."""
    params = default_params(trainer) if params is None else params
    return TRAINERS[trainer][0](config, dataset, params, seed)


def params_dict(params) -> dict:
    return asdict(params)
