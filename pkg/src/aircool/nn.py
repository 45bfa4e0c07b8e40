"""Minimal feed-forward networks with exact backpropagation.

Rectifier hidden layers, identity output, 64-bit floats throughout. This
is all the machinery the Q-network and the small regression MLPs need:
forward, backward for a squared-error-style objective, plain-gradient and
adaptive-moment updates, soft target blending, and a checkpoint container
that round-trips parameters bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_VERSION = 1


@dataclass
class Mlp:
    sizes: list[int]
    weights: list[np.ndarray]  # weights[i] has shape (sizes[i], sizes[i+1])
    biases: list[np.ndarray]

    def copy(self) -> "Mlp":
        return Mlp(
            sizes=list(self.sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass
class Grads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_mlp(sizes: list[int], rng: np.random.Generator) -> Mlp:
    """Glorot-uniform weights, zero biases."""
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return Mlp(sizes=list(sizes), weights=weights, biases=biases)


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Network output for a single input vector."""
    return forward_batch(net, np.asarray(x, dtype=np.float64).reshape(1, -1))[0][0]


def forward_batch(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Batch forward pass.

    Returns (outputs, cache) where cache holds the layer activations
    needed by backward: [a_0, ..., a_{L-1}] with a_0 the input batch and
    later entries the rectified hidden activations.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.sizes[0]:
        raise ValueError(f"expected input of shape (M, {net.sizes[0]}), got {x.shape}")
    cache = [x]
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
        if i != last:
            cache.append(a)
    return a, cache


def backward(net: Mlp, cache: list[np.ndarray], grad_out: np.ndarray) -> Grads:
    """Exact parameter gradients given dLoss/dOutput for the cached batch.

    grad_out has shape (M, sizes[-1]). The rectifier derivative is taken
    from the cached activations (a > 0 iff z > 0).
    """
    delta = np.asarray(grad_out, dtype=np.float64)
    gw: list[np.ndarray] = [None] * len(net.weights)
    gb: list[np.ndarray] = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        a_prev = cache[i]
        gw[i] = a_prev.T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (cache[i] > 0.0)
    return Grads(weights=gw, biases=gb)


@dataclass
class Sgd:
    """Plain gradient descent: theta <- theta - lr * grad."""

    lr: float

    def validate(self) -> None:
        if self.lr < 0:
            raise ValueError("step size must be non-negative")


@dataclass
class Adam:
    """Adaptive-moment estimation with bias correction."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def validate(self) -> None:
        if self.lr < 0:
            raise ValueError("step size must be non-negative")


def apply_update(net: Mlp, grads: Grads, opt: Sgd | Adam) -> None:
    """Update parameters in place per the optimizer mode."""
    opt.validate()
    params = net.weights + net.biases
    gs = grads.weights + grads.biases
    if isinstance(opt, Sgd):
        for p, g in zip(params, gs):
            p -= opt.lr * g
        return
    if not opt.m:
        opt.m = [np.zeros_like(p) for p in params]
        opt.v = [np.zeros_like(p) for p in params]
    opt.t += 1
    bc1 = 1.0 - opt.beta1 ** opt.t
    bc2 = 1.0 - opt.beta2 ** opt.t
    for p, g, m, v in zip(params, gs, opt.m, opt.v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= opt.lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)


def soft_blend(target: Mlp, source: Mlp, beta: float) -> Mlp:
    """Blend source into target in place: theta' <- beta*theta + (1-beta)*theta'."""
    if target.sizes != source.sizes:
        raise ValueError(f"shape mismatch: {target.sizes} vs {source.sizes}")
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    for pt, ps in zip(target.weights + target.biases, source.weights + source.biases):
        pt[:] = beta * ps + (1.0 - beta) * pt
    return target


def grad_norm(grads: Grads) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.weights + grads.biases)))


def clip_grad_norm(grads: Grads, max_norm: float) -> tuple[float, bool]:
    """Scale the gradient in place to global L2 norm max_norm when it exceeds it.

    Returns the pre-clip norm and whether clipping was applied.
    """
    norm = grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.weights + grads.biases:
            g *= scale
        return norm, True
    return norm, False


@dataclass
class ScaledMlp:
    """An Mlp plus fixed min/max bounds for inputs and outputs.

    predict() maps raw inputs through the bounds to [0, 1], runs the net,
    and maps outputs back to raw units. Degenerate bounds (lo == hi) pass
    values through unscaled.
    """

    net: Mlp
    x_lo: np.ndarray
    x_hi: np.ndarray
    y_lo: np.ndarray
    y_hi: np.ndarray

    def _norm_x(self, x: np.ndarray) -> np.ndarray:
        span = np.where(self.x_hi > self.x_lo, self.x_hi - self.x_lo, 1.0)
        return (x - self.x_lo) / span

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        xn = self._norm_x(x.reshape(1, -1) if single else x)
        yn, _ = forward_batch(self.net, xn)
        span = np.where(self.y_hi > self.y_lo, self.y_hi - self.y_lo, 1.0)
        y = yn * span + self.y_lo
        return y[0] if single else y


def save_mlp(path: str, net: Mlp, meta: dict | None = None) -> None:
    """Write a versioned checkpoint; parameters round-trip bit-exactly."""
    arrays = {
        "format_version": np.array(CHECKPOINT_VERSION),
        "sizes": np.asarray(net.sizes, dtype=np.int64),
        "meta_json": np.array(json.dumps(meta or {}, sort_keys=True)),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_mlp(path: str) -> tuple[Mlp, dict]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        sizes = [int(s) for s in data["sizes"]]
        weights = [data[f"w{i}"] for i in range(len(sizes) - 1)]
        biases = [data[f"b{i}"] for i in range(len(sizes) - 1)]
        meta = json.loads(str(data["meta_json"]))
    return Mlp(sizes=sizes, weights=weights, biases=biases), meta
