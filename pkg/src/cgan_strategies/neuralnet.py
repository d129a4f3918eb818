"""Dense feed-forward networks with hand-written backpropagation and minibatch SGD.

Weights are stored as ``(fan_in, fan_out)`` matrices so a layer computes
``a @ W + b`` on row-major batches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ShapeMismatchError, TrainingDivergenceError

SIGMOID_EPS = 1e-7
SNAPSHOT_FORMAT = "mlpnet"
SNAPSHOT_VERSION = 1

_HIDDEN = ("relu", "tanh")
_OUTPUT = ("linear", "sigmoid")


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    batch_size: int = 252
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")


@dataclass(frozen=True)
class MlpNet:
    weights: tuple
    biases: tuple
    hidden_activation: str = "relu"
    output_activation: str = "linear"
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.hidden_activation not in _HIDDEN:
            raise ValueError(f"hidden_activation must be one of {_HIDDEN}")
        if self.output_activation not in _OUTPUT:
            raise ValueError(f"output_activation must be one of {_OUTPUT}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeMismatchError("need one bias vector per weight matrix")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ShapeMismatchError(f"layer {i}: weight {W.shape} / bias {b.shape}")
            if i and W.shape[0] != self.weights[i - 1].shape[1]:
                raise ShapeMismatchError(f"layer {i} expects {W.shape[0]} inputs, "
                                         f"previous layer emits {self.weights[i - 1].shape[1]}")
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "biases", tuple(self.biases))

    @property
    def layer_dims(self):
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @property
    def n_params(self):
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def predict(self, X):
        return forward(self, X)[-1]

    def to_dict(self):
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "layer_dims": self.layer_dims,
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
            "weight_decay": self.weight_decay,
            "weights": [W.ravel().tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != SNAPSHOT_FORMAT or d.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported network blob {d.get('format')!r} v{d.get('version')}")
        dims = d["layer_dims"]
        weights = [np.array(w, dtype=float).reshape(dims[i], dims[i + 1]) for i, w in enumerate(d["weights"])]
        biases = [np.array(b, dtype=float) for b in d["biases"]]
        return cls(weights, biases, d["hidden_activation"], d["output_activation"], float(d["weight_decay"]))


def init_mlp(layer_dims, rng, hidden_activation="relu", output_activation="linear", weight_decay=0.0) -> MlpNet:
    """Glorot-uniform weights, zero biases."""
    if len(layer_dims) < 2 or min(layer_dims) < 1:
        raise ValueError(f"bad layer_dims {layer_dims}")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpNet(weights, biases, hidden_activation, output_activation, weight_decay)


def _hidden(kind, z):
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _hidden_grad(kind, a):
    # derivative expressed through the activation output
    return (a > 0).astype(float) if kind == "relu" else 1.0 - a * a


def forward(net: MlpNet, X) -> list:
    """Return ``[X, a_1, ..., a_L]``; the last entry is the network output.

    Sigmoid outputs are clamped to ``[1e-7, 1 - 1e-7]``.
    """
    a = np.asarray(X, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[1] != net.weights[0].shape[0]:
        raise ShapeMismatchError(f"input has {a.shape[1]} columns, net expects {net.weights[0].shape[0]}")
    acts = [a]
    last = len(net.weights) - 1
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ W + b
        if i < last:
            a = _hidden(net.hidden_activation, z)
        elif net.output_activation == "sigmoid":
            a = np.clip(expit(z), SIGMOID_EPS, 1.0 - SIGMOID_EPS)
        else:
            a = z
        acts.append(a)
    return acts


def backward(net: MlpNet, activations, upstream):
    """Backpropagate ``upstream = dLoss/dOutput`` through a forward pass.

    Returns ``(grads, input_grad)`` where ``grads`` is a list of ``(dW, db)``
    per layer and ``input_grad`` is ``dLoss/dX`` with the shape of the input.
    """
    delta = np.asarray(upstream, dtype=float)
    out = activations[-1]
    if delta.shape != out.shape:
        raise ShapeMismatchError(f"upstream {delta.shape} vs output {out.shape}")
    if net.output_activation == "sigmoid":
        delta = delta * out * (1.0 - out)
    grads = [None] * len(net.weights)
    for i in range(len(net.weights) - 1, -1, -1):
        a_prev = activations[i]
        grads[i] = (a_prev.T @ delta, delta.sum(axis=0))
        delta = delta @ net.weights[i].T
        if i > 0:
            delta = delta * _hidden_grad(net.hidden_activation, a_prev)
    return grads, delta


def sgd_step(net: MlpNet, grads, config: SgdConfig, epoch=None) -> MlpNet:
    """One plain SGD update; weight decay applies to weight matrices only."""
    lr = config.learning_rate
    new_w, new_b = [], []
    for (W, b), (gW, gb) in zip(zip(net.weights, net.biases), grads):
        if gW.shape != W.shape or gb.shape != b.shape:
            raise ShapeMismatchError(f"gradient {gW.shape} does not match weight {W.shape}")
        if not (np.all(np.isfinite(gW)) and np.all(np.isfinite(gb))):
            raise TrainingDivergenceError("non-finite gradient", epoch)
        if net.weight_decay:
            gW = gW + net.weight_decay * W
        new_w.append(W - lr * gW)
        new_b.append(b - lr * gb)
    return MlpNet(new_w, new_b, net.hidden_activation, net.output_activation, net.weight_decay)


def minibatches(n, batch_size, rng):
    """Shuffled index batches covering ``range(n)``; the last batch may be short."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def fit_mse(net: MlpNet, X, y, config: SgdConfig) -> MlpNet:
    """Train a single-output net on mean squared error."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    rng = np.random.default_rng(config.seed)
    for epoch in range(config.epochs):
        for idx in minibatches(len(X), config.batch_size, rng):
            acts = forward(net, X[idx])
            upstream = 2.0 * (acts[-1] - y[idx]) / len(idx)
            grads, _ = backward(net, acts, upstream)
            net = sgd_step(net, grads, config, epoch)
    return net
