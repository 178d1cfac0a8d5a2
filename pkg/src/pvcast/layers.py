"""Network building blocks: dense, LSTM, scaled dot-product attention, and
the temporal transformation that collapses a sequence to the forecast grid.

All layers are built on the autodiff ops, hold their parameters as Tensors
with requires_grad=True, and initialize weights uniformly in
+-sqrt(6/(fan_in+fan_out)) from a caller-supplied seeded generator.
"""

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ContractError, ShapeError

ACTIVATIONS = ("none", "sigmoid", "tanh")


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class DenseLayer:
    """Affine map with an optional pointwise activation."""

    def __init__(self, in_features: int, out_features: int, activation: str = "none",
                 rng: np.random.Generator | None = None):
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}'")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_features = in_features
        self.out_features = out_features
        self.activation = activation
        self.weights = Tensor(_glorot(rng, in_features, out_features, (in_features, out_features)),
                              requires_grad=True)
        self.bias = Tensor(np.zeros(out_features), requires_grad=True)

    def parameters(self):
        return [("weights", self.weights), ("bias", self.bias)]

    def __call__(self, x) -> Tensor:
        return dense_forward(self, x)


def dense_forward(layer: DenseLayer, x) -> Tensor:
    """activation(x @ W + b), broadcast over any leading axes."""
    x = ad.as_tensor(x)
    if x.shape[-1] != layer.in_features:
        raise ShapeError(
            f"dense expects last axis {layer.in_features}, got input shape {x.shape}")
    squeeze = x.data.ndim == 1
    if squeeze:
        x = ad.reshape(x, (1, x.shape[0]))
    y = ad.add(ad.matmul(x, layer.weights), layer.bias)
    if layer.activation == "sigmoid":
        y = ad.sigmoid(y)
    elif layer.activation == "tanh":
        y = ad.tanh(y)
    if squeeze:
        y = ad.reshape(y, (layer.out_features,))
    return y


class LstmLayer:
    """Single LSTM layer with input, forget, and output gates plus a tanh
    cell candidate, stored as fused weight blocks in (i, f, g, o) order."""

    def __init__(self, input_size: int, units: int, rng: np.random.Generator | None = None,
                 forget_bias: float = 1.0):
        if units <= 0:
            raise ConfigError("units must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.input_size = input_size
        self.units = units
        self.w_x = Tensor(_glorot(rng, input_size, 4 * units, (input_size, 4 * units)),
                          requires_grad=True)
        self.w_h = Tensor(_glorot(rng, units, 4 * units, (units, 4 * units)),
                          requires_grad=True)
        bias = np.zeros(4 * units)
        bias[units:2 * units] = forget_bias
        self.bias = Tensor(bias, requires_grad=True)

    def parameters(self):
        return [("w_x", self.w_x), ("w_h", self.w_h), ("bias", self.bias)]

    def initial_state(self, batch: int) -> tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.units))
        return Tensor(zeros.copy()), Tensor(zeros.copy())


def lstm_step(layer: LstmLayer, x_t, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
    """One recurrence step: c' = f*c + i*g, h' = o*tanh(c')."""
    x_t = ad.as_tensor(x_t)
    h, c = state
    if x_t.shape[-1] != layer.input_size:
        raise ShapeError(f"lstm input width {x_t.shape[-1]}, expected {layer.input_size}")
    if h.shape[-1] != layer.units or c.shape[-1] != layer.units:
        raise ContractError(
            f"lstm state width {h.shape[-1]}/{c.shape[-1]}, expected {layer.units}")
    u = layer.units
    pre = ad.add(ad.add(ad.matmul(x_t, layer.w_x), ad.matmul(h, layer.w_h)), layer.bias)
    i = ad.sigmoid(ad.slice_axis(pre, -1, 0, u))
    f = ad.sigmoid(ad.slice_axis(pre, -1, u, 2 * u))
    g = ad.tanh(ad.slice_axis(pre, -1, 2 * u, 3 * u))
    o = ad.sigmoid(ad.slice_axis(pre, -1, 3 * u, 4 * u))
    c_next = ad.add(ad.mul(f, c), ad.mul(i, g))
    h_next = ad.mul(o, ad.tanh(c_next))
    return h_next, c_next


class AttentionLayer:
    """Scaled dot-product attention with learned query/key/value projections
    into a common width; the key width doubles as the score scale."""

    def __init__(self, query_size: int, key_size: int, value_size: int, width: int,
                 rng: np.random.Generator | None = None):
        if width <= 0:
            raise ConfigError("attention width must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.width = width
        self.w_q = DenseLayer(query_size, width, rng=rng)
        self.w_k = DenseLayer(key_size, width, rng=rng)
        self.w_v = DenseLayer(value_size, width, rng=rng)

    def parameters(self):
        out = []
        for name, part in (("w_q", self.w_q), ("w_k", self.w_k), ("w_v", self.w_v)):
            out.extend((f"{name}.{pname}", p) for pname, p in part.parameters())
        return out

    def project_keys_values(self, k, v) -> tuple[Tensor, Tensor]:
        """Project once; reusable across every query of the same sequence."""
        return self.w_k(k), self.w_v(v)


def attention_weights(qp: Tensor, kp: Tensor, width: int) -> Tensor:
    scores = ad.scale(ad.matmul(qp, ad.swap_last_axes(kp)), 1.0 / math.sqrt(width))
    return ad.softmax(scores)


def attend_projected(qp: Tensor, kp: Tensor, vp: Tensor, width: int) -> Tensor:
    return ad.matmul(attention_weights(qp, kp, width), vp)


def attention(q, k, v, layer: AttentionLayer, return_weights: bool = False):
    """Weighted context over keys/values: softmax((qWq)(kWk)^T / sqrt(d)) (vWv)."""
    q, k, v = ad.as_tensor(q), ad.as_tensor(k), ad.as_tensor(v)
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"key steps {k.shape[-2]} != value steps {v.shape[-2]}")
    qp = layer.w_q(q)
    kp, vp = layer.project_keys_values(k, v)
    weights = attention_weights(qp, kp, layer.width)
    out = ad.matmul(weights, vp)
    if return_weights:
        return out, weights
    return out


class TemporalTransform:
    """Linear map over the time axis down to a fixed step count, followed by
    a per-step linear feature projection."""

    def __init__(self, in_steps: int, feature_size: int, out_features: int,
                 out_steps: int = 24, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_steps = in_steps
        self.out_steps = out_steps
        self.time_weights = Tensor(_glorot(rng, in_steps, out_steps, (in_steps, out_steps)),
                                   requires_grad=True)
        self.feature_proj = DenseLayer(feature_size, out_features, rng=rng)

    def parameters(self):
        out = [("time_weights", self.time_weights)]
        out.extend((f"feature_proj.{n}", p) for n, p in self.feature_proj.parameters())
        return out


def temporal_transform(t: TemporalTransform, x) -> Tensor:
    """Project (..., in_steps, features) to (..., out_steps, out_features)."""
    x = ad.as_tensor(x)
    if x.shape[-2] != t.in_steps:
        raise ShapeError(f"temporal transform expects {t.in_steps} steps, got {x.shape[-2]}")
    collapsed = ad.matmul(ad.swap_last_axes(x), t.time_weights)
    return t.feature_proj(ad.swap_last_axes(collapsed))
