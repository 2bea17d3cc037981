"""Dense statevector simulation of few-qubit circuits.

States live in the computational basis with qubit 0 as the least significant
bit of the basis index. Gates are applied with stride-indexed amplitude-pair
updates; no 2^n x 2^n matrix is ever materialized on this path (the dense
matrix construction lives in oracle.py and exists to test this one). Pair
addressing views the amplitude array as a [2] * n tensor, where qubit q is
axis n-1-q; slicing that axis yields the two halves of every amplitude pair
as writable views, so updates run in place with no index gathers.

Two APIs share this kernel:

* single-state operations (new_state, apply_gate, run_circuit, ...) follow
  the value-semantics contract: they return fresh StateVector objects and
  never mutate their inputs;
* a batched layer evolves many states at once, with per-column angles where
  needed, which is how the quanv and QCNN layers evaluate thousands of
  parameter bindings per image in a handful of vectorized numpy calls.
  Batched amplitudes are stored transposed, shape (2^n, B) with the batch
  axis contiguous, so every gate update streams over unit-stride memory.
  Column b of a batched run is bit-identical to the corresponding
  single-state run because both paths execute the same elementwise
  operations per column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, GateOp, ROTATION_KINDS
from .errors import CapacityError, CollapseError

MAX_QUBITS = 12


def _bit_axis_views(amps_t: np.ndarray, n: int, target: int, control: int | None):
    """(bit=0 slice, bit=1 slice) of the target qubit of a (2^n, ...) array,
    restricted to control=|1> when a control is given. Writable views.

    Trailing axes (one or more) are batch axes; the leading axis is the
    basis index and is unpacked into n bit axes, qubit q at axis n-1-q.
    """
    view = amps_t.reshape(*([2] * n), *amps_t.shape[1:])
    ndim = view.ndim
    index0: list = [slice(None)] * ndim
    index1: list = [slice(None)] * ndim
    t_axis = n - 1 - target
    index0[t_axis] = 0
    index1[t_axis] = 1
    if control is not None:
        c_axis = n - 1 - control
        index0[c_axis] = 1
        index1[c_axis] = 1
    return view[tuple(index0)], view[tuple(index1)]


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitudes over the 2^n_qubits basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"amplitude length {amps.shape} does not match n_qubits={self.n_qubits}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class Observable:
    """Pauli-Z on a single qubit; expectation values lie in [-1, 1]."""

    qubit: int


def new_state(n_qubits: int) -> StateVector:
    """The |0...0> register on n_qubits qubits, 1 <= n_qubits <= 12."""
    if not (1 <= n_qubits <= MAX_QUBITS):
        raise CapacityError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _zero_batch_t(n_qubits: int, batch: int) -> np.ndarray:
    if not (1 <= n_qubits <= MAX_QUBITS):
        raise CapacityError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps_t = np.zeros((1 << n_qubits, batch), dtype=np.complex128)
    amps_t[0, :] = 1.0
    return amps_t


def _check_indices(n: int, gate: GateOp) -> None:
    if not (0 <= gate.target < n):
        raise IndexError(f"target {gate.target} out of range for {n} qubits")
    if gate.control is not None and not (0 <= gate.control < n):
        raise IndexError(f"control {gate.control} out of range for {n} qubits")


def apply_gate_transposed(amps_t: np.ndarray, gate: GateOp, angle) -> None:
    """Apply one gate in place to (2^n, *batch) amplitudes.

    `angle` is None for X/CNOT; rotation kinds take a scalar or any radian
    array that broadcasts against the batch axes (e.g. length-B for a
    (2^n, B) matrix) to bind different angles per batch entry.
    """
    n = int(amps_t.shape[0]).bit_length() - 1
    _check_indices(n, gate)
    kind = gate.kind
    a, b = _bit_axis_views(amps_t, n, gate.target, gate.control)

    if kind in ("X", "CNOT"):
        tmp = a.copy()
        a[...] = b
        b[...] = tmp
        return

    theta = np.asarray(angle, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise ValueError(f"non-finite angle for {kind}")

    # Length-B angle arrays broadcast over the trailing batch axis directly.
    if kind in ("RZ", "CRZ"):
        e0 = np.exp(-0.5j * theta)
        a *= e0
        b *= np.conj(e0)
    elif kind in ("RX", "CRX"):
        c = np.cos(theta / 2.0)
        ms = -1j * np.sin(theta / 2.0)
        new_a = c * a + ms * b
        b *= c
        b += ms * a
        a[...] = new_a
    else:
        raise ValueError(f"unknown gate kind {kind!r}")


def run_batch_transposed(
    n_qubits: int,
    ops,
    angles,
    batch: int | None = None,
    initial_t: np.ndarray | None = None,
) -> np.ndarray:
    """Evolve a (2^n, B) amplitude matrix through an op list.

    `angles` aligns with `ops`; each entry is None (angle-free gate), a
    scalar, or a length-B array binding a different angle per column.
    Columns start from |0...0> unless `initial_t` is given (not mutated).
    """
    if initial_t is None:
        if batch is None:
            raise ValueError("either batch or initial_t must be given")
        amps_t = _zero_batch_t(n_qubits, batch)
    else:
        amps_t = np.array(initial_t, dtype=np.complex128, order="C")
        if amps_t.ndim < 2 or amps_t.shape[0] != (1 << n_qubits):
            raise ValueError(f"initial shape {amps_t.shape} invalid for n={n_qubits}")
    for op, angle in zip(ops, angles):
        apply_gate_transposed(amps_t, op, angle)
    return amps_t


def expectation_z_transposed(amps_t: np.ndarray, qubit: int) -> np.ndarray:
    """Batch-shaped <Z_qubit> of (2^n, *batch) amplitudes."""
    p0, p1 = _marginal_transposed(amps_t, qubit)
    return p0 - p1


def _marginal_transposed(amps_t: np.ndarray, qubit: int) -> tuple[np.ndarray, np.ndarray]:
    n = int(amps_t.shape[0]).bit_length() - 1
    if not (0 <= qubit < n):
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    zero_side, one_side = _bit_axis_views(amps_t, n, qubit, None)
    batch_ndim = amps_t.ndim - 1
    reduce_axes = tuple(range(zero_side.ndim - batch_ndim))
    p0 = (zero_side.real**2 + zero_side.imag**2).sum(axis=reduce_axes)
    p1 = (one_side.real**2 + one_side.imag**2).sum(axis=reduce_axes)
    return p0, p1


# (B, 2^n) convenience wrappers around the transposed kernel.


def apply_gate_batched(amps: np.ndarray, gate: GateOp, angle) -> None:
    """Apply one gate in place to a (B, 2^n) amplitude matrix."""
    amps_t = np.ascontiguousarray(amps.T)
    apply_gate_transposed(amps_t, gate, angle)
    amps[...] = amps_t.T


def run_ops_batched(
    n_qubits: int,
    ops,
    angles,
    batch: int | None = None,
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Row-major counterpart of run_batch_transposed; returns (B, 2^n)."""
    initial_t = None
    if initial is not None:
        initial = np.asarray(initial, dtype=np.complex128)
        if initial.ndim != 2 or initial.shape[1] != (1 << n_qubits):
            raise ValueError(f"initial batch shape {initial.shape} invalid for n={n_qubits}")
        initial_t = np.ascontiguousarray(initial.T)
    amps_t = run_batch_transposed(n_qubits, ops, angles, batch=batch, initial_t=initial_t)
    return np.ascontiguousarray(amps_t.T)


def expectation_z_batched(amps: np.ndarray, qubit: int) -> np.ndarray:
    """Per-row <Z_qubit> of a (B, 2^n) amplitude matrix."""
    return expectation_z_transposed(np.ascontiguousarray(amps.T), qubit)


def apply_gate(state: StateVector, gate: GateOp, bound_angle: float | None = None) -> StateVector:
    """Apply a single gate, returning a new StateVector.

    For rotation kinds the angle comes from `bound_angle` if given, else from
    the gate's fixed angle; slot-parameterized gates require `bound_angle`.
    """
    angle = None
    if gate.kind in ROTATION_KINDS:
        if bound_angle is not None:
            angle = float(bound_angle)
        elif isinstance(gate.angle, float):
            angle = gate.angle
        else:
            raise ValueError(f"gate slot {gate.angle!r} needs a bound angle")
    amps_t = state.amplitudes[:, None].copy()
    apply_gate_transposed(amps_t, gate, angle)
    return StateVector(state.n_qubits, amps_t[:, 0])


def run_circuit(circuit: Circuit, params: dict[str, float], initial: StateVector) -> StateVector:
    """Apply the circuit's gates in order with slots bound from `params`."""
    if initial.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"state has {initial.n_qubits} qubits, circuit needs {circuit.n_qubits}"
        )
    angles = circuit.bind(params)
    amps_t = run_batch_transposed(
        circuit.n_qubits, circuit.ops, angles, initial_t=initial.amplitudes[:, None]
    )
    return StateVector(circuit.n_qubits, amps_t[:, 0])


def expectation_z(state: StateVector, qubit: int) -> float:
    """<Z> on one qubit: P(bit=0) - P(bit=1), in [-1, 1]."""
    return float(expectation_z_transposed(state.amplitudes[:, None], qubit)[0])


def expectation(state: StateVector, obs: Observable) -> float:
    return expectation_z(state, obs.qubit)


def measure_probability(state: StateVector, qubit: int, outcome: int) -> float:
    """Probability of observing `outcome` (0 or 1) on `qubit`."""
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    p0, p1 = _marginal_transposed(state.amplitudes[:, None], qubit)
    return float(p1[0] if outcome else p0[0])


def collapse(state: StateVector, qubit: int, outcome: int) -> StateVector:
    """Project onto the given measurement outcome and renormalize."""
    p = measure_probability(state, qubit, outcome)
    if p <= 1e-12:
        raise CollapseError(
            f"outcome {outcome} on qubit {qubit} has probability {p:.3e}"
        )
    amps_t = state.amplitudes[:, None].copy()
    zero_side, one_side = _bit_axis_views(amps_t, state.n_qubits, qubit, None)
    (one_side if outcome == 0 else zero_side)[...] = 0.0
    amps_t /= np.sqrt(p)
    return StateVector(state.n_qubits, amps_t[:, 0])
