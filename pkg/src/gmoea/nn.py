"""
Small feedforward network engine in numpy.

Covers exactly what the GAN needs: Glorot-uniform initialisation, batched
forward pass with cached activations, exact backpropagation (including the
gradient with respect to the network input, which the generator update needs),
Adam with bias correction, and the discriminator/generator loss gradients.
Parameter sets are values: ``adam_step`` returns new arrays and never mutates
its inputs.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from gmoea.errors import DimensionError, PreconditionError, StateError

logger = logging.getLogger(__name__)

PROB_EPS = 1e-7


def _sigmoid(z):
    # split form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _relu(z):
    return np.maximum(z, 0.0)


ACTIVATIONS = {"relu": _relu, "sigmoid": _sigmoid}


def _activation_grad(name, z, a):
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    return a * (1.0 - a)


@dataclass
class MlpParams:
    """Layer list of (W: out x in, b: out) plus activation tags."""

    layers: List[Tuple[np.ndarray, np.ndarray]]
    hidden: str = "relu"
    output: str = "sigmoid"

    def __post_init__(self):
        if self.hidden not in ACTIVATIONS or self.output not in ACTIVATIONS:
            raise PreconditionError(f"unknown activation {self.hidden!r}/{self.output!r}")
        for (w_prev, _), (w_next, _) in zip(self.layers, self.layers[1:]):
            if w_prev.shape[0] != w_next.shape[1]:
                raise DimensionError("adjacent layer dimensions do not chain")

    @property
    def dims(self):
        return [self.layers[0][0].shape[1]] + [w.shape[0] for w, _ in self.layers]

    @property
    def in_dim(self):
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self):
        return self.layers[-1][0].shape[0]

    def arrays(self):
        """Flat list [W1, b1, W2, b2, ...]."""
        return [arr for layer in self.layers for arr in layer]

    def with_arrays(self, arrays):
        layers = [(arrays[2 * i], arrays[2 * i + 1]) for i in range(len(self.layers))]
        return MlpParams(layers, self.hidden, self.output)


@dataclass
class ForwardCache:
    params: MlpParams
    inputs: List[np.ndarray]
    pre: List[np.ndarray]
    post: List[np.ndarray]


@dataclass
class Gradients:
    layers: List[Tuple[np.ndarray, np.ndarray]]
    d_input: np.ndarray

    def arrays(self):
        return [arr for layer in self.layers for arr in layer]


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def mlp_init(layer_dims, rng, hidden="relu", output="sigmoid"):
    """Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise PreconditionError(f"need at least two positive layer sizes, got {layer_dims}")
    layers = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append((W, np.zeros(fan_out)))
    return MlpParams(layers, hidden, output)


def adam_init(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    zeros = [np.zeros_like(a) for a in params.arrays()]
    return AdamState(zeros, [z.copy() for z in zeros], 0, lr, beta1, beta2, eps)


def forward(p, x):
    """Network output for a vector or a row batch, plus the cache for backward."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != p.in_dim:
        raise DimensionError(f"network expects {p.in_dim} inputs, got {a.shape[1]}")
    inputs, pre, post = [], [], []
    last = len(p.layers) - 1
    for i, (W, b) in enumerate(p.layers):
        inputs.append(a)
        z = a @ W.T + b
        a = ACTIVATIONS[p.output if i == last else p.hidden](z)
        pre.append(z)
        post.append(a)
    out = a[0] if single else a
    return out, ForwardCache(p, inputs, pre, post)


def backward(p, cache, d_output):
    """Exact parameter gradients given dLoss/dOutput for every cached sample."""
    if cache.params is not p:
        raise StateError("cache was produced by a different parameter set")
    delta = np.atleast_2d(np.asarray(d_output, dtype=np.float64))
    if delta.shape != cache.post[-1].shape:
        raise DimensionError(f"output gradient shape {delta.shape} != {cache.post[-1].shape}")
    grads = [None] * len(p.layers)
    last = len(p.layers) - 1
    for i in range(last, -1, -1):
        W, _ = p.layers[i]
        act = p.output if i == last else p.hidden
        dz = delta * _activation_grad(act, cache.pre[i], cache.post[i])
        grads[i] = (dz.T @ cache.inputs[i], dz.sum(axis=0))
        delta = dz @ W
    return Gradients(grads, delta)


def adam_step(p, s, g):
    """One bias-corrected Adam update; returns new (params, state)."""
    params = p.arrays()
    grads = g.arrays() if isinstance(g, Gradients) else list(g)
    if len(grads) != len(params) or any(a.shape != b.shape for a, b in zip(params, grads)):
        raise DimensionError("gradient shapes do not match parameters")
    t = s.t + 1
    new_params, new_m, new_v = [], [], []
    for theta, grad, m, v in zip(params, grads, s.m, s.v):
        m = s.beta1 * m + (1.0 - s.beta1) * grad
        v = s.beta2 * v + (1.0 - s.beta2) * grad * grad
        m_hat = m / (1.0 - s.beta1 ** t)
        v_hat = v / (1.0 - s.beta2 ** t)
        new_params.append(theta - s.lr * m_hat / (np.sqrt(v_hat) + s.eps))
        new_m.append(m)
        new_v.append(v)
    return p.with_arrays(new_params), replace(s, m=new_m, v=new_v, t=t)


def _clamp(prob):
    return np.clip(np.asarray(prob, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


def disc_loss_and_grad(d_real, d_fake, d_gen):
    """Negated three-term discriminator objective and its output gradients.

    Each term is a mean over its own samples; an empty group contributes
    nothing. Returns ``(loss, (g_real, g_fake, g_gen))``.
    """
    r, f, z = _clamp(d_real), _clamp(d_fake), _clamp(d_gen)
    loss = 0.0
    g_r = np.zeros_like(r)
    g_f = np.zeros_like(f)
    g_z = np.zeros_like(z)
    if r.size:
        loss -= np.mean(np.log(r))
        g_r = -1.0 / (r.size * r)
    if f.size:
        loss -= np.mean(np.log(1.0 - f))
        g_f = 1.0 / (f.size * (1.0 - f))
    if z.size:
        loss -= np.mean(np.log(1.0 - z))
        g_z = 1.0 / (z.size * (1.0 - z))
    return float(loss), (g_r, g_f, g_z)


def gen_loss_and_grad(d_gen, non_saturating=False):
    """Generator loss mean log(1 - D(G(z))), or -mean log D(G(z)) when non-saturating."""
    z = _clamp(d_gen)
    if z.size == 0:
        raise PreconditionError("generator loss needs at least one sample")
    if non_saturating:
        return float(-np.mean(np.log(z))), -1.0 / (z.size * z)
    return float(np.mean(np.log(1.0 - z))), -1.0 / (z.size * (1.0 - z))


def save_params(path, p):
    """Flat float64 dump: int64 header [n_dims, dims...] then W, b per layer."""
    dims = np.array([len(p.dims)] + p.dims, dtype=np.int64)
    with open(path, "wb") as f:
        dims.tofile(f)
        for arr in p.arrays():
            np.ascontiguousarray(arr, dtype=np.float64).tofile(f)


def load_params(path, hidden="relu", output="sigmoid"):
    with open(path, "rb") as f:
        n = int(np.fromfile(f, dtype=np.int64, count=1)[0])
        dims = np.fromfile(f, dtype=np.int64, count=n).tolist()
        layers = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            W = np.fromfile(f, dtype=np.float64, count=fan_in * fan_out).reshape(fan_out, fan_in)
            b = np.fromfile(f, dtype=np.float64, count=fan_out)
            layers.append((W, b))
    return MlpParams(layers, hidden, output)
