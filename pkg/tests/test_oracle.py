"""Dense Kronecker-product oracle: construction and self-consistency."""

import random

import numpy as np
import pytest

from quanvolute.circuits import Circuit, GateOp
from quanvolute.errors import CapacityError
from quanvolute.oracle import dense_unitary_oracle, embed_single, gate_unitary

from helpers import random_circuit


def test_empty_circuit_is_identity():
    u = dense_unitary_oracle(Circuit(2, (), ()), {})
    np.testing.assert_array_equal(u, np.eye(4))


def test_single_x_matrix():
    u = dense_unitary_oracle(Circuit(1, (GateOp("X", 0),), ()), {})
    np.testing.assert_array_equal(u, [[0, 1], [1, 0]])


def test_embed_respects_lsb_convention():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    # X on qubit 0 of two qubits swaps within each pair of adjacent indices
    np.testing.assert_array_equal(
        embed_single(x, 0, 2),
        [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    )
    # X on qubit 1 swaps blocks
    np.testing.assert_array_equal(
        embed_single(x, 1, 2),
        [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]],
    )


def test_cnot_unitary_truth_table():
    u = gate_unitary(GateOp("CNOT", target=1, control=0), None, 2)
    # |00> -> |00>, |01> -> |11>, |10> -> |10>, |11> -> |01>
    np.testing.assert_array_equal(
        u, [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]
    )


def test_random_circuit_unitarity():
    rng = random.Random(77)
    circuit, params = random_circuit(rng, 4, 20)
    u = dense_unitary_oracle(circuit, params)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(16), atol=1e-10)


def test_capacity_cap():
    with pytest.raises(CapacityError):
        dense_unitary_oracle(Circuit(9, (), ()), {})
