"""Reversed-MERA quantum convolutional network.

The register shrinks from n qubits to 1 through log2(n) stage pairs. Each
conv stage applies one shared CRZ-CRX-CRZ block (3 angles) to every adjacent
pair of active qubits, even-indexed pairs first, then odd-indexed. Each pool
stage halves the active set: pair (source q_{2i+1}, sink q_{2i}) applies a
two-angle correction block (RZ, RX on the sink) driven by the source, after
which the source is inactive. A two-angle single-qubit head acts on the last
active qubit, and the readout is its exact Z expectation.

Pooling modes:

* "controlled_gate": the correction block is applied as CRZ/CRX controlled
  on the source.
* "measure_correct": semantically, the source is measured and the correction
  is applied only when |1> is seen. Because a measured source is never
  touched again, the deferred-measurement principle makes this exactly the
  controlled construction followed by a terminal readout, so the forward
  pass evaluates the same controlled circuit and stays deterministic and
  differentiable. The explicit branch-and-collapse evaluation exists as a
  test oracle and agrees to 1e-10.

Parameters are shared within a stage. The flat circuit gives every gate a
unique slot; `slot_groups` maps each shared name to its replica slots, and
gradients sum replicas (shift rule per replica), which is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, GateOp
from .errors import CapacityError, TrainingDivergenceError
from .gradients import shift_plan
from .nn import Adam, SGD
from .rng import Xoshiro256StarStar, derive_seed
from .statevector import (
    StateVector,
    expectation_z,
    expectation_z_transposed,
    run_batch_transposed,
    run_circuit,
)

POOL_MODES = ("controlled_gate", "measure_correct")
CONV_BLOCK_KINDS = ("CRZ", "CRX", "CRZ")
POOL_BLOCK_KINDS = ("CRZ", "CRX")
HEAD_KINDS = ("RZ", "RX")


@dataclass(frozen=True)
class ConvStageSpec:
    """One conv stage: shared 3-angle block over adjacent active pairs."""

    pairs: tuple[tuple[int, int], ...]  # (target, control) per block
    shared_slots: tuple[str, str, str]
    op_range: tuple[int, int]


@dataclass(frozen=True)
class PoolStageSpec:
    """One pool stage: (source, sink) pairs with a 2-angle correction block."""

    mode: str
    pairs: tuple[tuple[int, int], ...]  # (source, sink)
    shared_slots: tuple[str, str]
    op_range: tuple[int, int]


@dataclass(frozen=True)
class QcnnModel:
    n_qubits: int
    pool_mode: str
    stages: tuple
    circuit: Circuit
    shared_names: tuple[str, ...]
    slot_groups: dict[str, tuple[str, ...]]
    readout_qubit: int
    active_trajectory: tuple[int, ...]

    @property
    def n_params(self) -> int:
        return len(self.shared_names)

    def depth(self) -> int:
        """Stage-counted depth: 2 per conv stage, 1 per pool stage, 1 head."""
        pairs = len(self.stages) // 2
        return 3 * pairs + 1

    def bind_shared(self, values: np.ndarray) -> dict[str, float]:
        """Expand shared parameter values to the flat circuit's slots."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} values, got shape {values.shape}")
        binding: dict[str, float] = {}
        for shared, value in zip(self.shared_names, values):
            for slot in self.slot_groups[shared]:
                binding[slot] = float(value)
        return binding


def _adjacent_pairs(active: list[int]) -> list[tuple[int, int]]:
    """Even-indexed adjacent pairs first, then odd-indexed, over the active list."""
    pairs = [(active[i], active[i + 1]) for i in range(0, len(active) - 1, 2)]
    pairs += [(active[i], active[i + 1]) for i in range(1, len(active) - 1, 2)]
    return pairs


def build_qcnn(n_qubits: int, pool_mode: str = "controlled_gate") -> QcnnModel:
    """Construct the alternating conv/pool model; n_qubits must be 4 or 8.

    Parameter count is 5 * log2(n) + 2: three conv angles and two pool
    angles per stage pair plus the two head angles.
    """
    if n_qubits not in (4, 8):
        raise CapacityError(f"n_qubits must be 4 or 8, got {n_qubits}")
    if pool_mode not in POOL_MODES:
        raise ValueError(f"pool_mode must be one of {POOL_MODES}, got {pool_mode!r}")

    ops: list[GateOp] = []
    stages: list = []
    shared_names: list[str] = []
    slot_groups: dict[str, tuple[str, ...]] = {}
    active = list(range(n_qubits))
    trajectory = [len(active)]
    stage_index = 0

    while len(active) > 1:
        # Convolution stage: shared block on adjacent active pairs. The
        # higher-index qubit of each pair drives the block as control.
        conv_slots = tuple(f"conv{stage_index}.{k}" for k in ("rz0", "rx", "rz1"))
        pairs = _adjacent_pairs(active)
        start = len(ops)
        replicas: dict[str, list[str]] = {s: [] for s in conv_slots}
        conv_pairs = []
        for b, (lo, hi) in enumerate(pairs):
            for kind, shared in zip(CONV_BLOCK_KINDS, conv_slots):
                slot = f"{shared}#b{b}"
                ops.append(GateOp(kind, target=lo, control=hi, angle=slot))
                replicas[shared].append(slot)
            conv_pairs.append((lo, hi))
        for shared in conv_slots:
            shared_names.append(shared)
            slot_groups[shared] = tuple(replicas[shared])
        stages.append(ConvStageSpec(tuple(conv_pairs), conv_slots, (start, len(ops))))

        # Pooling stage: odd-position active qubits pour into their
        # even-position neighbours, then go inactive.
        pool_slots = tuple(f"pool{stage_index}.{k}" for k in ("rz", "rx"))
        start = len(ops)
        replicas = {s: [] for s in pool_slots}
        pool_pairs = []
        sinks = []
        for p in range(0, len(active) - 1, 2):
            sink, source = active[p], active[p + 1]
            for kind, shared in zip(POOL_BLOCK_KINDS, pool_slots):
                slot = f"{shared}#p{p // 2}"
                ops.append(GateOp(kind, target=sink, control=source, angle=slot))
                replicas[shared].append(slot)
            pool_pairs.append((source, sink))
            sinks.append(sink)
        if len(active) % 2 == 1:
            sinks.append(active[-1])
        for shared in pool_slots:
            shared_names.append(shared)
            slot_groups[shared] = tuple(replicas[shared])
        stages.append(
            PoolStageSpec(pool_mode, tuple(pool_pairs), pool_slots, (start, len(ops)))
        )
        active = sinks
        trajectory.append(len(active))
        stage_index += 1

    # Fully connected head on the surviving qubit.
    readout = active[0]
    head_slots = ("head.rz", "head.rx")
    for kind, shared in zip(HEAD_KINDS, head_slots):
        ops.append(GateOp(kind, target=readout, angle=shared))
        shared_names.append(shared)
        slot_groups[shared] = (shared,)

    all_slots = tuple(op.slot for op in ops)
    circuit = Circuit(n_qubits, tuple(ops), all_slots)
    return QcnnModel(
        n_qubits=n_qubits,
        pool_mode=pool_mode,
        stages=tuple(stages),
        circuit=circuit,
        shared_names=tuple(shared_names),
        slot_groups=slot_groups,
        readout_qubit=readout,
        active_trajectory=tuple(trajectory),
    )


def qcnn_forward(model: QcnnModel, values: np.ndarray, input_state: StateVector) -> float:
    """Readout <Z> in [-1, 1] for one input state."""
    if input_state.n_qubits != model.n_qubits:
        raise ValueError(
            f"input has {input_state.n_qubits} qubits, model needs {model.n_qubits}"
        )
    binding = model.bind_shared(values)
    final = run_circuit(model.circuit, binding, input_state)
    return expectation_z(final, model.readout_qubit)


def _op_base_angles(model: QcnnModel, values: np.ndarray) -> list[float]:
    binding = model.bind_shared(values)
    return [binding[op.slot] for op in model.circuit.ops]


def qcnn_forward_batched(model: QcnnModel, values: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Readout <Z> per row of a (B, 2^n) amplitude matrix."""
    angles = _op_base_angles(model, values)
    states_t = np.ascontiguousarray(states.T)
    amps_t = run_batch_transposed(model.n_qubits, model.circuit.ops, angles, initial_t=states_t)
    return expectation_z_transposed(amps_t, model.readout_qubit)


def qcnn_weighted_grad(
    model: QcnnModel, values: np.ndarray, states: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """Gradient of sum_b weights[b] * <Z>(state_b) w.r.t. shared parameters.

    Every (replica slot, shift) variant for every example is packed into one
    batched run; replica gradients are then summed into their shared slot in
    declaration order.
    """
    n_examples = states.shape[0]
    ops = model.circuit.ops
    base = _op_base_angles(model, values)
    op_index = {op.slot: i for i, op in enumerate(ops)}
    kind_of = {op.slot: op.kind for op in ops}

    # variant list: (shared index, op index, shift, coeff)
    variants = []
    for s_idx, shared in enumerate(model.shared_names):
        for slot in model.slot_groups[shared]:
            for shift, coeff in shift_plan(kind_of[slot]):
                variants.append((s_idx, op_index[slot], shift, coeff))

    n_var = len(variants)
    total = n_var * n_examples
    angle_table: list[np.ndarray | float] = list(base)
    touched = sorted({op_i for _, op_i, _, _ in variants})
    columns = {op_i: np.full(total, base[op_i]) for op_i in touched}
    for v, (_, op_i, shift, _) in enumerate(variants):
        columns[op_i][v * n_examples : (v + 1) * n_examples] += shift
    for op_i, col in columns.items():
        angle_table[op_i] = col

    tiled_t = np.tile(np.ascontiguousarray(states.T), (1, n_var))
    amps_t = run_batch_transposed(model.n_qubits, ops, angle_table, initial_t=tiled_t)
    e = expectation_z_transposed(amps_t, model.readout_qubit).reshape(n_var, n_examples)
    weighted = e @ np.asarray(weights, dtype=np.float64)

    grad = np.zeros(model.n_params)
    for v, (s_idx, _, _, coeff) in enumerate(variants):
        grad[s_idx] += coeff * weighted[v]
    return grad


@dataclass(frozen=True)
class QuantumDataset:
    """Labeled pure states: amplitude rows plus binary labels."""

    n_qubits: int
    states: np.ndarray  # (size, 2^n) complex
    labels: np.ndarray  # (size,) int, values {0, 1}

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, i: int) -> StateVector:
        return StateVector(self.n_qubits, self.states[i])

    def subset(self, indices) -> "QuantumDataset":
        idx = np.asarray(indices)
        return QuantumDataset(self.n_qubits, self.states[idx].copy(), self.labels[idx].copy())


def _product_rx_state(angles: np.ndarray) -> np.ndarray:
    """Amplitudes of (x)_i RX(angle_i)|0>, qubit 0 least significant."""
    state = np.array([1.0 + 0.0j])
    for phi in angles:  # later (higher) qubits multiply on the left
        q = np.array([math.cos(phi / 2.0), -1j * math.sin(phi / 2.0)])
        state = np.kron(q, state)
    return state


def _apply_cz_ring(amps: np.ndarray, n_qubits: int) -> None:
    idx = np.arange(amps.shape[0])
    for i in range(n_qubits):
        j = (i + 1) % n_qubits
        both = (((idx >> i) & 1) == 1) & (((idx >> j) & 1) == 1)
        amps[both] *= -1.0


def synth_dataset(n_qubits: int, size: int, seed: int) -> QuantumDataset:
    """Synthetic binary state-classification task, balanced and seeded.

    Label 0: product states (x) RX(phi_i)|0>, phi_i ~ U(0, pi/4); nearly
    aligned with |0...0>, zero entanglement across any cut. Label 1: the
    same product construction, then a ring of CZ gates, then a second RX
    layer with phi_i ~ U(3pi/4, pi); the CZ ring entangles the register and
    the second layer pushes every qubit's <Z> negative. A plain threshold on
    the mean single-qubit <Z> already separates the classes, so the task is
    easy enough to certify training on.
    """
    if size % 2 != 0:
        raise ValueError(f"size must be even for balanced labels, got {size}")
    if not (2 <= n_qubits <= 10):
        raise CapacityError(f"n_qubits must be in 2..10, got {n_qubits}")
    rng = Xoshiro256StarStar(derive_seed(seed, "synth", n_qubits))
    states = np.empty((size, 1 << n_qubits), dtype=np.complex128)
    labels = np.empty(size, dtype=np.int64)
    for i in range(size):
        label = i % 2
        first = rng.uniforms(n_qubits, 0.0, math.pi / 4.0)
        amps = _product_rx_state(first)
        if label == 1:
            _apply_cz_ring(amps, n_qubits)
            second = rng.uniforms(n_qubits, 3.0 * math.pi / 4.0, math.pi)
            rx_ops = [GateOp("RX", target=q, angle=float(a)) for q, a in enumerate(second)]
            amps = run_batch_transposed(
                n_qubits, rx_ops, [op.angle for op in rx_ops], initial_t=amps[:, None]
            )[:, 0]
        states[i] = amps
        labels[i] = label
    return QuantumDataset(n_qubits, states, labels)


def qcnn_predict(model: QcnnModel, values: np.ndarray, dataset: QuantumDataset) -> np.ndarray:
    """Predicted labels: sign of <Z> (positive or zero -> label 0)."""
    e = qcnn_forward_batched(model, values, dataset.states)
    return (e < 0.0).astype(np.int64)


def qcnn_accuracy(model: QcnnModel, values: np.ndarray, dataset: QuantumDataset) -> float:
    return float(np.mean(qcnn_predict(model, values, dataset) == dataset.labels))


def init_qcnn_params(model: QcnnModel, seed: int) -> np.ndarray:
    rng = Xoshiro256StarStar(derive_seed(seed, "qcnn-init"))
    return rng.uniforms(model.n_params, -math.pi / 10.0, math.pi / 10.0)


def train_qcnn(
    model: QcnnModel,
    dataset: QuantumDataset,
    epochs: int,
    optimizer: SGD | Adam,
    batch_size: int = 20,
    seed: int = 0,
    eval_dataset: QuantumDataset | None = None,
    init_params: np.ndarray | None = None,
):
    """Squared-error training of the readout against targets z in {+1, -1}.

    Label 0 maps to target +1, label 1 to -1; the per-example loss is
    (<Z> - target)^2. Returns (trained values, per-epoch history), where
    each history row records mean loss, train accuracy, and eval accuracy
    (NaN when no eval set is given).
    """
    values = (
        init_qcnn_params(model, seed) if init_params is None else np.array(init_params, dtype=np.float64)
    )
    params = {"qcnn": values}
    targets = 1.0 - 2.0 * dataset.labels.astype(np.float64)
    size = len(dataset)
    history = []
    for epoch in range(epochs):
        order_rng = Xoshiro256StarStar(derive_seed(seed, "qcnn-order", epoch))
        order = order_rng.sample_indices(size, size)
        loss_sum = 0.0
        correct = 0
        for start in range(0, size, batch_size):
            idx = order[start : start + batch_size]
            states = dataset.states[idx]
            t = targets[idx]
            e = qcnn_forward_batched(model, params["qcnn"], states)
            residual = e - t
            loss_sum += float(residual @ residual)
            correct += int(np.sum((e < 0.0) == (t < 0.0)))
            weights = 2.0 * residual / len(idx)
            grad = qcnn_weighted_grad(model, params["qcnn"], states, weights)
            optimizer.step(params, {"qcnn": grad})
        loss = loss_sum / size
        if not math.isfinite(loss):
            raise TrainingDivergenceError(f"non-finite loss at epoch {epoch}")
        row = {
            "epoch": epoch,
            "loss": loss,
            "accuracy": correct / size,
            "eval_accuracy": (
                qcnn_accuracy(model, params["qcnn"], eval_dataset)
                if eval_dataset is not None
                else float("nan")
            ),
        }
        history.append(row)
    return params["qcnn"], history
