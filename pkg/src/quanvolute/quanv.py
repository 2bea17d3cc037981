"""Quantum convolution layer: 2x2 windows through a learnable 4-qubit filter.

Pipeline per window: the four pixels (values in [0, 1]) become RX angles
pi*pixel on qubits 0..3 (window positions (0,0),(0,1),(1,0),(1,1) in that
order), a fixed-topology entangling circuit with six trainable controlled
rotations runs, and the decoded activation is the exact <Z> of qubit 0.
Sliding the window over an H x W single-channel image and repeating per
filter yields an (H-2)/stride+1 square feature map with one channel per
filter; outputs always lie in [-1, 1].

Filter topology (slots w0..w5 are the trainable angles):

    q0: RX(pi*p00) --CRZ(w0)-- --CRX(w1)-- --CRZ(w4)-- --CRX(w5)--  <Z>
    q1: RX(pi*p01)   ctrl         ctrl
    q2: RX(pi*p10) --CRZ(w2)-- --CRX(w3)--   ctrl         ctrl
    q3: RX(pi*p11)   ctrl         ctrl

Feature maps are plain float64 ndarrays shaped (H, W, C) throughout the
package.

The layer never evaluates windows one at a time: forward and backward build
one batched amplitude matrix covering every (filter, parameter-binding,
window) combination and run the gate sequence once over it. Results are
bit-identical to the single-state path, and identical regardless of how
callers parallelize, because each row is evolved by the same elementwise
operations and reductions happen in fixed index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, GateOp
from .errors import ShapeError, UnsupportedInputError
from .gradients import shift_plan
from .rng import Xoshiro256StarStar
from .statevector import apply_gate_transposed, expectation_z_transposed

ENCODING_SLOTS = ("a00", "a01", "a10", "a11")
VAR_SLOTS = ("w0", "w1", "w2", "w3", "w4", "w5")
N_FILTER_PARAMS = len(VAR_SLOTS)
WINDOW = 2
INIT_SCALE = math.pi / 10.0


def filter_circuit() -> Circuit:
    """The fixed 4-qubit filter template shared by all quanv filters."""
    ops = (
        GateOp("RX", target=0, angle="a00"),
        GateOp("RX", target=1, angle="a01"),
        GateOp("RX", target=2, angle="a10"),
        GateOp("RX", target=3, angle="a11"),
        GateOp("CRZ", target=0, control=1, angle="w0"),
        GateOp("CRX", target=0, control=1, angle="w1"),
        GateOp("CRZ", target=2, control=3, angle="w2"),
        GateOp("CRX", target=2, control=3, angle="w3"),
        GateOp("CRZ", target=0, control=2, angle="w4"),
        GateOp("CRX", target=0, control=2, angle="w5"),
    )
    return Circuit(4, ops, ENCODING_SLOTS + VAR_SLOTS)


_TEMPLATE = filter_circuit()
# The template starts with the four per-qubit encoding RX gates; every
# following op carries one trainable slot, in VAR_SLOTS order.
_VAR_OPS = tuple(op for op in _TEMPLATE.ops if op.slot in VAR_SLOTS)
_VAR_OP_KINDS = tuple(
    next(op.kind for op in _TEMPLATE.ops if op.slot == slot) for slot in VAR_SLOTS
)
READOUT_QUBIT = 0


def encode_window(pixels: np.ndarray) -> dict[str, float]:
    """Map a 2x2 pixel block in [0, 1] to the four encoding angles pi*pixel."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape != (WINDOW, WINDOW):
        raise ShapeError(f"expected a 2x2 window, got shape {pixels.shape}")
    if np.any(pixels < 0.0) or np.any(pixels > 1.0):
        raise ValueError(f"pixel values outside [0, 1]: {pixels.tolist()}")
    return {
        "a00": math.pi * float(pixels[0, 0]),
        "a01": math.pi * float(pixels[0, 1]),
        "a10": math.pi * float(pixels[1, 0]),
        "a11": math.pi * float(pixels[1, 1]),
    }


def init_filter_params(channels: int, rng: Xoshiro256StarStar) -> np.ndarray:
    """(channels, 6) trainable angles, uniform in (-pi/10, pi/10).

    Small angles keep initial filters near the identity regime, like
    small-weight init in classical nets.
    """
    return np.array(
        [[rng.uniform(-INIT_SCALE, INIT_SCALE) for _ in VAR_SLOTS] for _ in range(channels)]
    )


@dataclass
class QuanvFilter:
    """One filter: the shared circuit template plus its six angles."""

    params: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (N_FILTER_PARAMS,):
            raise ShapeError(f"filter params must have shape (6,), got {self.params.shape}")

    @property
    def circuit_template(self) -> Circuit:
        return _TEMPLATE


@dataclass
class QuanvLayer:
    """A bank of quanv filters sharing topology but not parameters."""

    filters: list[QuanvFilter]
    stride: int = 1

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not self.filters:
            raise ValueError("layer needs at least one filter")

    @classmethod
    def create(cls, channels: int = 8, stride: int = 1, seed: int = 0) -> "QuanvLayer":
        rng = Xoshiro256StarStar(seed)
        params = init_filter_params(channels, rng)
        return cls([QuanvFilter(row) for row in params], stride)

    @property
    def channels(self) -> int:
        return len(self.filters)

    @property
    def param_matrix(self) -> np.ndarray:
        """(channels, 6) view of all filter parameters (copy)."""
        return np.stack([f.params for f in self.filters])

    def set_param_matrix(self, params: np.ndarray) -> None:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.channels, N_FILTER_PARAMS):
            raise ShapeError(
                f"expected shape {(self.channels, N_FILTER_PARAMS)}, got {params.shape}"
            )
        for f, row in zip(self.filters, params):
            f.params = row.copy()


def _as_single_channel(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        if image.shape[2] != 1:
            raise UnsupportedInputError(
                f"quanv input must be single-channel, got {image.shape[2]} channels"
            )
        image = image[:, :, 0]
    if image.ndim != 2:
        raise ShapeError(f"expected H x W or H x W x 1 input, got shape {image.shape}")
    return image


def output_spatial(size: int, stride: int) -> int:
    """Windows along one axis: (size - 2) // stride + 1 (no padding)."""
    return (size - WINDOW) // stride + 1


def _window_angles(image: np.ndarray, stride: int) -> tuple[np.ndarray, int, int]:
    """Row-major window encoding angles, shape (n_windows, 4)."""
    h, w = image.shape
    if h < WINDOW or w < WINDOW:
        raise ShapeError(f"image {h}x{w} smaller than the 2x2 window")
    if np.any(image < 0.0) or np.any(image > 1.0):
        raise ValueError("pixel values outside [0, 1]")
    out_h = output_spatial(h, stride)
    out_w = output_spatial(w, stride)
    ys = np.arange(out_h) * stride
    xs = np.arange(out_w) * stride
    blocks = np.stack(
        [
            image[np.ix_(ys, xs)],
            image[np.ix_(ys, xs + 1)],
            image[np.ix_(ys + 1, xs)],
            image[np.ix_(ys + 1, xs + 1)],
        ],
        axis=-1,
    )
    return math.pi * blocks.reshape(out_h * out_w, 4), out_h, out_w


def _encoded_states(enc_angles: np.ndarray) -> np.ndarray:
    """(16, W) product-state amplitudes after the four encoding RX gates.

    RX(a)|0> = [cos(a/2), -i sin(a/2)], so the encoded register is a product
    whose amplitude at basis index b is the product of per-qubit factors,
    multiplied here in qubit order to match sequential gate application.
    """
    half = enc_angles.T / 2.0  # (4, W)
    factors = np.empty((4, 2, enc_angles.shape[0]), dtype=np.complex128)
    factors[:, 0, :] = np.cos(half)
    factors[:, 1, :] = -1j * np.sin(half)
    state = (
        factors[0][None, None, None, :, :]
        * factors[1][None, None, :, None, :]
        * factors[2][None, :, None, None, :]
        * factors[3][:, None, None, None, :]
    )
    return state.reshape(16, enc_angles.shape[0])


def _eval_variants(param_rows: np.ndarray, enc_angles: np.ndarray) -> np.ndarray:
    """<Z_0> for every (parameter-binding row, window) pair.

    param_rows: (R, 6) trainable-angle bindings; enc_angles: (W, 4) encoding
    angles. Returns (R, W). The encoded window states are built once and
    broadcast across binding rows, so each variable gate runs a single
    vectorized update over a (16, R, W) amplitude block with its trig
    evaluated on R distinct angles only.
    """
    n_rows = param_rows.shape[0]
    n_win = enc_angles.shape[0]
    encoded = _encoded_states(enc_angles)  # (16, W)
    amps = np.array(
        np.broadcast_to(encoded[:, None, :], (16, n_rows, n_win)), order="C"
    )
    for k, op in enumerate(_VAR_OPS):
        apply_gate_transposed(amps, op, param_rows[:, k][:, None])
    return expectation_z_transposed(amps, READOUT_QUBIT)


def filter_forward(filt: QuanvFilter, pixels: np.ndarray) -> float:
    """Activation of one filter on one 2x2 window: <Z_0> in [-1, 1]."""
    enc = encode_window(pixels)
    enc_row = np.array([[enc[s] for s in ENCODING_SLOTS]])
    return float(_eval_variants(filt.params[None, :], enc_row)[0, 0])


def layer_forward(layer: QuanvLayer, image: np.ndarray) -> np.ndarray:
    """Feature map of shape (out_h, out_w, channels) for a 1-channel image."""
    image = _as_single_channel(image)
    enc, out_h, out_w = _window_angles(image, layer.stride)
    e = _eval_variants(layer.param_matrix, enc)
    return np.ascontiguousarray(e.T.reshape(out_h, out_w, layer.channels))


def layer_backward(layer: QuanvLayer, image: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Parameter gradients, shape (channels, 6).

    grad[c, k] = sum over windows of upstream[y, x, c] * d activation / d w_k,
    windows accumulated in row-major order. Per-window derivatives come from
    the shift rules in gradients.shift_plan, evaluated in one batch.
    """
    image = _as_single_channel(image)
    enc, out_h, out_w = _window_angles(image, layer.stride)
    channels = layer.channels
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (out_h, out_w, channels):
        raise ShapeError(
            f"upstream shape {upstream.shape} != {(out_h, out_w, channels)}"
        )
    params = layer.param_matrix

    plans = [shift_plan(kind) for kind in _VAR_OP_KINDS]
    variant_rows = []
    coeffs = []
    spans = []  # (filter, slot, start, stop) into the variant axis
    for c in range(channels):
        for k in range(N_FILTER_PARAMS):
            start = len(variant_rows)
            for shift, coeff in plans[k]:
                row = params[c].copy()
                row[k] += shift
                variant_rows.append(row)
                coeffs.append(coeff)
            spans.append((c, k, start, len(variant_rows)))

    e = _eval_variants(np.array(variant_rows), enc)  # (R, n_windows)
    coeffs = np.array(coeffs)
    u = upstream.reshape(out_h * out_w, channels)

    grads = np.zeros((channels, N_FILTER_PARAMS))
    for c, k, start, stop in spans:
        per_window = coeffs[start:stop] @ e[start:stop]  # d activation / d w_k
        grads[c, k] = per_window @ u[:, c]
    return grads
