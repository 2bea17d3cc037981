"""Minimal from-scratch classical NN pieces: dense, ReLU, softmax
cross-entropy, a 2x2 conv2d, and SGD/Adam optimizers.

Everything takes and returns plain float64 ndarrays. Single-example
signatures are the contract; batch helpers stack examples on a leading axis
and reduce in fixed index order so results do not depend on caller-side
parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, TrainingDivergenceError
from .rng import Xoshiro256StarStar


def glorot_uniform(rng: Xoshiro256StarStar, fan_in: int, fan_out: int, shape) -> np.ndarray:
    """Uniform(-sqrt(6/(fan_in+fan_out)), +...) init, drawn row-major."""
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    n = int(np.prod(shape))
    return rng.uniforms(n, -bound, bound).reshape(shape)


@dataclass
class DenseLayer:
    """Affine map y = W x + b with W of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"inconsistent dense shapes {self.weights.shape} / {self.bias.shape}"
            )

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: Xoshiro256StarStar) -> "DenseLayer":
        w = glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim))
        return cls(w, np.zeros(out_dim))


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """y = W x + b. Accepts (in,) or a batch (B, in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.weights.shape[1]:
        raise ShapeError(
            f"input dim {x.shape[-1]} != layer in-dim {layer.weights.shape[1]}"
        )
    return x @ layer.weights.T + layer.bias


def dense_backward(layer: DenseLayer, x: np.ndarray, dy: np.ndarray):
    """Gradients (dW, db, dx) for y = W x + b.

    Batched inputs reduce over the leading axis: dW = dy^T x, db = sum dy.
    """
    x = np.asarray(x, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    if x.shape[:-1] != dy.shape[:-1] or dy.shape[-1] != layer.weights.shape[0]:
        raise ShapeError(f"gradient shape {dy.shape} inconsistent with input {x.shape}")
    if x.ndim == 1:
        dw = np.outer(dy, x)
        db = dy.copy()
    else:
        dw = dy.T @ x
        db = dy.sum(axis=0)
    dx = dy @ layer.weights
    return dw, db, dx


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return dy * (x > 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis (max subtraction)."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: np.ndarray, label: int):
    """(loss, dlogits) for -log softmax(logits)[label] on one example."""
    logits = np.asarray(logits, dtype=np.float64)
    if not (0 <= label < logits.shape[-1]):
        raise ValueError(f"label {label} out of range for {logits.shape[-1]} classes")
    p = softmax(logits)
    loss = -math.log(max(p[label], 1e-300))
    dlogits = p.copy()
    dlogits[label] -= 1.0
    return loss, dlogits


def softmax_xent_batch(logits: np.ndarray, labels: np.ndarray):
    """Mean loss and mean-reduced dlogits over a (B, K) batch."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    b = logits.shape[0]
    p = softmax(logits)
    picked = np.clip(p[np.arange(b), labels], 1e-300, None)
    loss = float(-np.log(picked).mean())
    dlogits = p
    dlogits[np.arange(b), labels] -= 1.0
    return loss, dlogits / b


@dataclass
class Conv2DLayer:
    """2x2 cross-correlation over a single-channel image, C_out channels."""

    kernels: np.ndarray  # (C_out, 2, 2)
    bias: np.ndarray  # (C_out,)
    stride: int = 1

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.kernels.ndim != 3 or self.kernels.shape[1:] != (2, 2):
            raise ShapeError(f"kernels must be (C, 2, 2), got {self.kernels.shape}")
        if self.bias.shape != (self.kernels.shape[0],):
            raise ShapeError(f"bias shape {self.bias.shape} != ({self.kernels.shape[0]},)")

    @classmethod
    def create(cls, channels: int, rng: Xoshiro256StarStar, stride: int = 1) -> "Conv2DLayer":
        k = glorot_uniform(rng, 4, channels, (channels, 2, 2))
        return cls(k, np.zeros(channels), stride)


def _conv_windows(image: np.ndarray, stride: int):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        if image.shape[2] != 1:
            raise ShapeError(f"conv2d input must be single-channel, got {image.shape}")
        image = image[:, :, 0]
    if image.ndim != 2 or image.shape[0] < 2 or image.shape[1] < 2:
        raise ShapeError(f"conv2d input too small: {image.shape}")
    out_h = (image.shape[0] - 2) // stride + 1
    out_w = (image.shape[1] - 2) // stride + 1
    ys = np.arange(out_h) * stride
    xs = np.arange(out_w) * stride
    win = np.stack(
        [
            image[np.ix_(ys, xs)],
            image[np.ix_(ys, xs + 1)],
            image[np.ix_(ys + 1, xs)],
            image[np.ix_(ys + 1, xs + 1)],
        ],
        axis=-1,
    )  # (out_h, out_w, 4)
    return win, out_h, out_w


def conv2d_forward(layer: Conv2DLayer, image: np.ndarray) -> np.ndarray:
    """(out_h, out_w, C_out) linear cross-correlation plus bias."""
    win, out_h, out_w = _conv_windows(image, layer.stride)
    k = layer.kernels.reshape(layer.kernels.shape[0], 4)
    return win @ k.T + layer.bias


def conv2d_backward(layer: Conv2DLayer, image: np.ndarray, dout: np.ndarray):
    """(dK, db, dx) for the cross-correlation."""
    win, out_h, out_w = _conv_windows(image, layer.stride)
    c_out = layer.kernels.shape[0]
    dout = np.asarray(dout, dtype=np.float64)
    if dout.shape != (out_h, out_w, c_out):
        raise ShapeError(f"dout shape {dout.shape} != {(out_h, out_w, c_out)}")
    dk = np.einsum("yxc,yxp->cp", dout, win).reshape(c_out, 2, 2)
    db = dout.sum(axis=(0, 1))
    if image.ndim == 3:
        h, w = image.shape[0], image.shape[1]
    else:
        h, w = image.shape
    dx = np.zeros((h, w))
    ys = np.arange(out_h) * layer.stride
    xs = np.arange(out_w) * layer.stride
    k = layer.kernels
    for dy_off in range(2):
        for dx_off in range(2):
            contrib = np.einsum("yxc,c->yx", dout, k[:, dy_off, dx_off])
            dx[np.ix_(ys + dy_off, xs + dx_off)] += contrib
    return dk, db, dx


def _check_finite_grads(grads: dict[str, np.ndarray]) -> None:
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError(f"non-finite gradient for {name!r}")


@dataclass
class SGD:
    """p <- p - lr * g."""

    learning_rate: float
    step_count: int = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        _check_finite_grads(grads)
        self.step_count += 1
        for name, g in grads.items():
            if params[name].shape != np.shape(g):
                raise ShapeError(f"gradient shape mismatch for {name!r}")
            params[name] -= self.learning_rate * g


@dataclass
class Adam:
    """Adam with bias-corrected moments (Kingma & Ba defaults)."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    _m: dict[str, np.ndarray] = field(default_factory=dict)
    _v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        _check_finite_grads(grads)
        self.step_count += 1
        t = self.step_count
        for name in grads:
            g = np.asarray(grads[name], dtype=np.float64)
            if params[name].shape != g.shape:
                raise ShapeError(f"gradient shape mismatch for {name!r}")
            m = self._m.setdefault(name, np.zeros_like(g))
            v = self._v.setdefault(name, np.zeros_like(g))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, learning_rate: float):
    if kind == "sgd":
        return SGD(learning_rate)
    if kind == "adam":
        return Adam(learning_rate)
    raise ValueError(f"unknown optimizer {kind!r}")
