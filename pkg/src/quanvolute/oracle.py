"""Brute-force dense unitary construction, used as a test oracle.

Each gate is expanded to an explicit 2^n x 2^n matrix through identity
Kronecker products and the circuit unitary is the ordered matrix product.
This path shares no code with the stride-indexed simulator in
statevector.py, which is the point: the two must agree to 1e-10 and are
checked against each other in the test suite.

Memory is O(4^n), so the oracle is capped at 8 qubits.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, GateOp, gate_block, CONTROLLED_KINDS
from .errors import CapacityError

ORACLE_MAX_QUBITS = 8

_P0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
_P1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128)


def embed_single(matrix: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Lift a 2x2 matrix acting on `qubit` to the full 2^n space.

    With qubit 0 as the least significant bit, the embedding is
    I_{2^(n-1-q)} (x) M (x) I_{2^q}.
    """
    left = np.eye(1 << (n_qubits - 1 - qubit), dtype=np.complex128)
    right = np.eye(1 << qubit, dtype=np.complex128)
    return np.kron(left, np.kron(matrix, right))


def gate_unitary(gate: GateOp, angle: float | None, n_qubits: int) -> np.ndarray:
    """Full-register unitary for one gate."""
    block = gate_block(gate.kind, angle)
    if gate.kind in CONTROLLED_KINDS:
        # P0 on control + P1 on control * block on target; the two embedded
        # factors commute because control != target.
        return embed_single(_P0, gate.control, n_qubits) + embed_single(
            _P1, gate.control, n_qubits
        ) @ embed_single(block, gate.target, n_qubits)
    return embed_single(block, gate.target, n_qubits)


def dense_unitary_oracle(circuit: Circuit, params: dict[str, float]) -> np.ndarray:
    """2^n x 2^n unitary of the whole circuit, gates composed in order."""
    if circuit.n_qubits > ORACLE_MAX_QUBITS:
        raise CapacityError(
            f"dense oracle supports at most {ORACLE_MAX_QUBITS} qubits, got {circuit.n_qubits}"
        )
    angles = circuit.bind(params)
    u = np.eye(1 << circuit.n_qubits, dtype=np.complex128)
    for op, angle in zip(circuit.ops, angles):
        u = gate_unitary(op, angle, circuit.n_qubits) @ u
    return u
