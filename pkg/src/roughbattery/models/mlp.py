"""Fully connected ReLU regressor trained with backpropagation and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "AdamState",
    "DivergenceError",
    "MlpConfig",
    "MlpNetwork",
    "adam_init",
    "mlp_forward",
    "mlp_gradients",
    "mlp_init",
    "mlp_train",
    "mlp_train_step",
]


class DivergenceError(FloatingPointError):
    """Loss or gradient went non-finite; lowering the learning rate usually helps."""


@dataclass(frozen=True)
class MlpConfig:
    layer_widths: tuple[int, ...] = (128, 256, 256, 256, 128, 64)
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    epochs: int = 100
    batch_size: int = 32
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if any(w < 1 for w in self.layer_widths):
            raise ValueError("layer widths must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass(frozen=True)
class MlpNetwork:
    """Dense layers; ``weights[l]`` has shape (fan_out, fan_in).

    Hidden layers apply ReLU, the single output unit is linear.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {l}: weight rows {w.shape[0]} != bias length {b.shape[0]}")
            if l and w.shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(f"layer {l}: fan-in {w.shape[1]} != previous width")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("output layer must have a single unit")

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[1]

    @property
    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def with_params(self, params: Sequence[np.ndarray]) -> "MlpNetwork":
        k = len(self.weights)
        return MlpNetwork(tuple(params[:k]), tuple(params[k:]))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _forward(self, _as_batch(self, X))[0]


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    t: int = 0


def mlp_init(config: MlpConfig, input_width: int, rng: np.random.Generator | None = None) -> MlpNetwork:
    """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
    if input_width < 1:
        raise ValueError("input_width must be >= 1")
    rng = np.random.default_rng(config.seed) if rng is None else rng
    sizes = [input_width, *config.layer_widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(tuple(weights), tuple(biases))


def adam_init(net: MlpNetwork) -> AdamState:
    zeros = tuple(np.zeros_like(p) for p in net.params)
    return AdamState(zeros, zeros, 0)


def _as_batch(net: MlpNetwork, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.input_width:
        raise ValueError(f"expected {net.input_width} features, got shape {X.shape}")
    return X


def _forward(net: MlpNetwork, X: np.ndarray, exact: bool = True) -> tuple[np.ndarray, list[np.ndarray]]:
    """Output vector plus the activations entering each layer.

    With ``exact`` the products go through einsum, which keeps every row's
    arithmetic independent of the batch it sits in, so batched and one-row
    predictions agree bitwise. Training uses the faster BLAS path.
    """
    acts = [X]
    h = X
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        pre = (np.einsum("nj,kj->nk", h, w) if exact else h @ w.T) + b
        h = pre if l == last else np.maximum(pre, 0.0)
        if l != last:
            acts.append(h)
    return h[:, 0], acts


def mlp_forward(net: MlpNetwork, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("mlp_forward takes a single feature vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return float(net.predict(x)[0])


def mlp_gradients(net: MlpNetwork, X, y, exact: bool = True) -> tuple[float, list[np.ndarray]]:
    """Mean squared error on the batch and its gradient for every parameter.

    Gradients come back in :attr:`MlpNetwork.params` order.
    """
    X = _as_batch(net, X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) != len(X) or len(y) == 0:
        raise ValueError("batch must be nonempty with one target per row")
    out, acts = _forward(net, X, exact)
    resid = out - y
    loss = float(np.mean(resid**2))
    delta = (2.0 / len(y)) * resid[:, None]
    gw: list[np.ndarray] = [None] * len(net.weights)
    gb: list[np.ndarray] = [None] * len(net.weights)
    for l in range(len(net.weights) - 1, -1, -1):
        a_in = acts[l]
        gw[l] = delta.T @ a_in
        gb[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ net.weights[l]) * (a_in > 0)
    return loss, [*gw, *gb]


def mlp_train_step(
    net: MlpNetwork, state: AdamState, batch, config: MlpConfig = MlpConfig()
) -> tuple[MlpNetwork, AdamState, float]:
    """One bias-corrected Adam update on the batch MSE. Returns the pre-update loss."""
    X, y = batch
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grads = mlp_gradients(net, X, y, exact=False)
    if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
        raise DivergenceError(f"non-finite loss or gradient at step {state.t + 1}")
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    t = state.t + 1
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    params, ms, vs = [], [], []
    for p, g, m, v in zip(net.params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        params.append(p - config.learning_rate * (m / c1) / (np.sqrt(v / c2) + eps))
        ms.append(m)
        vs.append(v)
    return net.with_params(params), AdamState(tuple(ms), tuple(vs), t), loss


def mlp_train(config: MlpConfig, train) -> tuple[MlpNetwork, list[float]]:
    """Mini-batch Adam over shuffled epochs; returns the network and mean loss per epoch."""
    X, y = train
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValueError("training data must be a nonempty matrix with one target per row")
    rng = np.random.default_rng(config.seed)
    net = mlp_init(config, X.shape[1], rng)
    state = adam_init(net)
    trace = []
    n = len(y)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            net, state, loss = mlp_train_step(net, state, (X[idx], y[idx]), config)
            total += loss * len(idx)
        trace.append(total / n)
    return net, trace
