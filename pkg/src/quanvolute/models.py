"""The three comparison models and their training/evaluation loops.

* qcnn: quanv layer (default 8 filters, 2x2 windows) -> flatten ->
  dense(64) -> ReLU -> dense(10) -> softmax cross-entropy.
* cnn: classical 2x2 conv with the same channel count replacing the quanv
  layer (linear by default; ReLU behind the cnn_relu flag), same head.
* fc: flatten(10x10) -> the same dense(64) -> ReLU -> dense(10) head.

Training is minibatch gradient descent on the epoch's sampled subset, with
separate optimizers for quantum angles (lr_quantum) and classical weights
(lr_classical). All reductions over examples run in index order, and worker
threads only farm out independent per-example quanv evaluations, so the
emitted metrics are identical for any --threads value.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .errors import FormatError, TrainingDivergenceError
from .mnist import Dataset, epoch_sample
from .nn import (
    Conv2DLayer,
    DenseLayer,
    dense_backward,
    dense_forward,
    conv2d_backward,
    conv2d_forward,
    glorot_uniform,
    make_optimizer,
    relu_backward,
    relu_forward,
    softmax,
    softmax_xent_batch,
)
from .quanv import N_FILTER_PARAMS, QuanvFilter, QuanvLayer, init_filter_params, layer_backward, layer_forward, output_spatial
from .rng import Xoshiro256StarStar, derive_seed

INPUT_SIDE = 10
N_CLASSES = 10
HIDDEN_UNITS = 64

QUANTUM_PARAMS = ("quanv.params",)


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # qcnn | cnn | fc
    channels: int = 8
    stride: int = 1
    cnn_relu: bool = False

    @classmethod
    def from_config(cls, config: TrainConfig) -> "ModelSpec":
        return cls(config.model, config.channels, config.stride, config.cnn_relu)

    @property
    def spatial(self) -> int:
        return output_spatial(INPUT_SIDE, self.stride)

    @property
    def feature_dim(self) -> int:
        if self.kind == "fc":
            return INPUT_SIDE * INPUT_SIDE
        return self.spatial * self.spatial * self.channels


def init_params(spec: ModelSpec, seed: int) -> dict[str, np.ndarray]:
    """Seeded parameter dict; stream names keep models independent."""
    params: dict[str, np.ndarray] = {}
    if spec.kind == "qcnn":
        rng = Xoshiro256StarStar(derive_seed(seed, "init", "quanv"))
        params["quanv.params"] = init_filter_params(spec.channels, rng)
    elif spec.kind == "cnn":
        rng = Xoshiro256StarStar(derive_seed(seed, "init", "conv"))
        params["conv.kernels"] = glorot_uniform(rng, 4, spec.channels, (spec.channels, 2, 2))
        params["conv.bias"] = np.zeros(spec.channels)
    rng = Xoshiro256StarStar(derive_seed(seed, "init", "head", spec.kind))
    d1 = DenseLayer.create(spec.feature_dim, HIDDEN_UNITS, rng)
    d2 = DenseLayer.create(HIDDEN_UNITS, N_CLASSES, rng)
    params["dense1.weights"] = d1.weights
    params["dense1.bias"] = d1.bias
    params["dense2.weights"] = d2.weights
    params["dense2.bias"] = d2.bias
    return params


def infer_spec(params: dict[str, np.ndarray], cnn_relu: bool = False) -> ModelSpec:
    """Reconstruct the architecture from checkpoint parameter shapes."""
    try:
        feat = params["dense1.weights"].shape[1]
        if "quanv.params" in params:
            kind = "qcnn"
            channels = params["quanv.params"].shape[0]
        elif "conv.kernels" in params:
            kind = "cnn"
            channels = params["conv.kernels"].shape[0]
        else:
            kind = "fc"
            channels = 8
    except (KeyError, IndexError) as exc:
        raise FormatError(f"checkpoint is missing model parameters: {exc}") from exc
    if kind == "fc":
        spec = ModelSpec(kind)
        if feat != spec.feature_dim:
            raise FormatError(f"fc head expects {spec.feature_dim} inputs, got {feat}")
        return spec
    if feat % channels != 0:
        raise FormatError(f"feature dim {feat} not divisible by {channels} channels")
    spatial = math.isqrt(feat // channels)
    if spatial < 2 or spatial * spatial * channels != feat:
        raise FormatError(f"feature dim {feat} is not a square spatial map")
    stride = (INPUT_SIDE - 2) // (spatial - 1)
    spec = ModelSpec(kind, channels, stride, cnn_relu)
    if spec.feature_dim != feat:
        raise FormatError(
            f"checkpoint feature dim {feat} matches no stride of the 10x10 input"
        )
    return spec


def _quanv_layer(spec: ModelSpec, params: dict[str, np.ndarray]) -> QuanvLayer:
    matrix = params["quanv.params"]
    if matrix.shape != (spec.channels, N_FILTER_PARAMS):
        raise FormatError(f"quanv parameter shape {matrix.shape} invalid")
    return QuanvLayer([QuanvFilter(row) for row in matrix], spec.stride)


def _thread_map(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def forward_batch(
    spec: ModelSpec,
    params: dict[str, np.ndarray],
    images: np.ndarray,
    threads: int = 1,
):
    """Logits (B, 10) plus the cache needed for backward."""
    b = images.shape[0]
    if spec.kind == "qcnn":
        layer = _quanv_layer(spec, params)
        maps = _thread_map(lambda img: layer_forward(layer, img), list(images), threads)
        features = np.stack([m.reshape(-1) for m in maps])
    elif spec.kind == "cnn":
        conv = Conv2DLayer(params["conv.kernels"], params["conv.bias"], spec.stride)
        maps = [conv2d_forward(conv, img) for img in images]
        if spec.cnn_relu:
            maps = [relu_forward(m) for m in maps]
        features = np.stack([m.reshape(-1) for m in maps])
    else:
        features = images.reshape(b, -1)

    d1 = DenseLayer(params["dense1.weights"], params["dense1.bias"])
    d2 = DenseLayer(params["dense2.weights"], params["dense2.bias"])
    h1 = dense_forward(d1, features)
    a1 = relu_forward(h1)
    logits = dense_forward(d2, a1)
    cache = {"features": features, "h1": h1, "a1": a1}
    return logits, cache


def backward_batch(
    spec: ModelSpec,
    params: dict[str, np.ndarray],
    images: np.ndarray,
    cache: dict,
    dlogits: np.ndarray,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Parameter gradients for a batch, reduced in example-index order."""
    d1 = DenseLayer(params["dense1.weights"], params["dense1.bias"])
    d2 = DenseLayer(params["dense2.weights"], params["dense2.bias"])
    grads: dict[str, np.ndarray] = {}
    dw2, db2, da1 = dense_backward(d2, cache["a1"], dlogits)
    dh1 = relu_backward(cache["h1"], da1)
    dw1, db1, dfeat = dense_backward(d1, cache["features"], dh1)
    grads["dense2.weights"] = dw2
    grads["dense2.bias"] = db2
    grads["dense1.weights"] = dw1
    grads["dense1.bias"] = db1

    if spec.kind == "qcnn":
        layer = _quanv_layer(spec, params)
        side = spec.spatial
        upstreams = dfeat.reshape(-1, side, side, spec.channels)
        per_example = _thread_map(
            lambda pair: layer_backward(layer, pair[0], pair[1]),
            list(zip(images, upstreams)),
            threads,
        )
        grads["quanv.params"] = np.sum(np.stack(per_example), axis=0)
    elif spec.kind == "cnn":
        conv = Conv2DLayer(params["conv.kernels"], params["conv.bias"], spec.stride)
        side = spec.spatial
        upstreams = dfeat.reshape(-1, side, side, spec.channels)
        dk_total = np.zeros_like(conv.kernels)
        db_total = np.zeros_like(conv.bias)
        for img, up in zip(images, upstreams):
            if spec.cnn_relu:
                pre = conv2d_forward(conv, img)
                up = relu_backward(pre, up)
            dk, db, _ = conv2d_backward(conv, img, up)
            dk_total += dk
            db_total += db
        grads["conv.kernels"] = dk_total
        grads["conv.bias"] = db_total
    return grads


@dataclass
class MetricRecord:
    epoch: int
    train_loss: float
    train_acc: float
    eval_acc: float
    wall_time_s: float


def evaluate(
    spec: ModelSpec,
    params: dict[str, np.ndarray],
    dataset: Dataset,
    eval_size: int | None = None,
    threads: int = 1,
):
    """(accuracy, 10x10 confusion matrix) over a fixed prefix of the split."""
    n = len(dataset) if eval_size is None else min(eval_size, len(dataset))
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    chunk = 100
    correct = 0
    for start in range(0, n, chunk):
        images = dataset.images[start : min(start + chunk, n)]
        labels = dataset.labels[start : min(start + chunk, n)]
        logits, _ = forward_batch(spec, params, images, threads)
        preds = np.argmax(logits, axis=1)
        correct += int(np.sum(preds == labels))
        for truth, pred in zip(labels, preds):
            confusion[truth, pred] += 1
    return correct / n if n else 0.0, confusion


def train_model(
    config: TrainConfig,
    train_ds: Dataset,
    eval_ds: Dataset,
    log=None,
) -> tuple[dict[str, np.ndarray], list[MetricRecord]]:
    """Run the configured experiment; returns final params and epoch metrics.

    train_loss / train_acc are running metrics over the epoch's sampled
    images, measured with the parameters in force when each batch was
    visited (before its update).
    """
    spec = ModelSpec.from_config(config)
    params = init_params(spec, config.seed)
    quantum_opt = make_optimizer(config.optimizer, config.lr_quantum)
    classical_opt = make_optimizer(config.optimizer, config.lr_classical)
    eval_size = None if config.full_eval else config.eval_size

    records: list[MetricRecord] = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        indices = epoch_sample(len(train_ds), config.samples_per_epoch, config.seed, epoch)
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(indices), config.batch_size):
            batch = indices[start : start + config.batch_size]
            images = train_ds.images[batch]
            labels = train_ds.labels[batch]
            logits, cache = forward_batch(spec, params, images, config.threads)
            loss, dlogits = softmax_xent_batch(logits, labels)
            if not math.isfinite(loss):
                raise TrainingDivergenceError(f"non-finite loss at epoch {epoch}")
            loss_sum += loss * len(batch)
            correct += int(np.sum(np.argmax(logits, axis=1) == labels))
            grads = backward_batch(spec, params, images, cache, dlogits, config.threads)
            quantum_grads = {k: v for k, v in grads.items() if k in QUANTUM_PARAMS}
            classical_grads = {k: v for k, v in grads.items() if k not in QUANTUM_PARAMS}
            if quantum_grads:
                quantum_opt.step(params, quantum_grads)
            if classical_grads:
                classical_opt.step(params, classical_grads)
        eval_acc, _ = evaluate(spec, params, eval_ds, eval_size, config.threads)
        record = MetricRecord(
            epoch=epoch,
            train_loss=loss_sum / len(indices),
            train_acc=correct / len(indices),
            eval_acc=eval_acc,
            wall_time_s=time.perf_counter() - t0,
        )
        records.append(record)
        if log is not None:
            log(
                f"[{config.model}] epoch {epoch}: loss {record.train_loss:.4f} "
                f"train_acc {record.train_acc:.3f} eval_acc {record.eval_acc:.3f} "
                f"({record.wall_time_s:.1f}s)"
            )
    return params, records


def predict_batch(spec: ModelSpec, params: dict[str, np.ndarray], images: np.ndarray, threads: int = 1) -> np.ndarray:
    logits, _ = forward_batch(spec, params, images, threads)
    return np.argmax(logits, axis=1)


def class_probabilities(spec: ModelSpec, params: dict[str, np.ndarray], image: np.ndarray) -> np.ndarray:
    logits, _ = forward_batch(spec, params, image[None], 1)
    return softmax(logits[0])
