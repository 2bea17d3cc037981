"""Simulator core: states, gates, expectations, measurement, collapse."""

import random

import numpy as np
import pytest

from quanvolute.circuits import Circuit, GateOp
from quanvolute.errors import CapacityError, CollapseError, BindingError
from quanvolute.oracle import dense_unitary_oracle
from quanvolute.statevector import (
    StateVector,
    apply_gate,
    collapse,
    expectation_z,
    expectation_z_batched,
    measure_probability,
    new_state,
    run_circuit,
    run_ops_batched,
)

from helpers import random_circuit, random_state

S2 = 1.0 / np.sqrt(2.0)


def bell_state() -> StateVector:
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = S2
    return StateVector(2, amps)


# --- new_state ---------------------------------------------------------


def test_ground_state_one_qubit():
    np.testing.assert_array_equal(new_state(1).amplitudes, [1, 0])


def test_ground_state_two_qubits():
    np.testing.assert_array_equal(new_state(2).amplitudes, [1, 0, 0, 0])


@pytest.mark.parametrize("n", [0, 13, -1])
def test_new_state_capacity(n):
    with pytest.raises(CapacityError):
        new_state(n)


# --- apply_gate --------------------------------------------------------


def test_rx_pi_flips_to_minus_i_one():
    out = apply_gate(new_state(1), GateOp("RX", 0, angle=np.pi))
    np.testing.assert_allclose(out.amplitudes, [0, -1j], atol=1e-10)


def test_rz_is_phase_only_on_ground_state():
    for theta in np.linspace(-np.pi, np.pi, 7):
        out = apply_gate(new_state(1), GateOp("RZ", 0, angle=float(theta)))
        np.testing.assert_allclose(np.abs(out.amplitudes), [1, 0], atol=1e-12)


def test_cnot_truth_table():
    # qubit 0 (LSB) = 1: basis index 1; CNOT(control=0, target=1) -> index 3
    one = apply_gate(new_state(2), GateOp("X", 0))
    out = apply_gate(one, GateOp("CNOT", target=1, control=0))
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1], atol=1e-12)
    # control=0 clear: no flip
    out = apply_gate(new_state(2), GateOp("CNOT", target=1, control=0))
    np.testing.assert_allclose(out.amplitudes, [1, 0, 0, 0], atol=1e-12)


def test_apply_gate_index_errors():
    state = new_state(2)
    with pytest.raises(IndexError):
        apply_gate(state, GateOp("X", 5))
    with pytest.raises(IndexError):
        apply_gate(state, GateOp("CNOT", target=0, control=3))


def test_apply_gate_rejects_non_finite_angle():
    with pytest.raises(ValueError):
        apply_gate(new_state(1), GateOp("RX", 0, angle="t"), bound_angle=np.nan)


def test_random_circuit_matches_dense_oracle():
    rng = random.Random(123)
    circuit, params = random_circuit(rng, 4, 20)
    u = dense_unitary_oracle(circuit, params)
    fast = run_circuit(circuit, params, new_state(4)).amplitudes
    np.testing.assert_allclose(fast, u @ new_state(4).amplitudes, atol=1e-10)


# --- run_circuit -------------------------------------------------------


def test_empty_circuit_is_identity():
    state = random_state(np.random.default_rng(5), 3)
    out = run_circuit(Circuit(3, (), ()), {}, state)
    np.testing.assert_array_equal(out.amplitudes, state.amplitudes)


def test_run_circuit_binds_slots():
    circuit = Circuit(1, (GateOp("RX", 0, angle="theta"),), ("theta",))
    out = run_circuit(circuit, {"theta": np.pi / 2}, new_state(1))
    np.testing.assert_allclose(out.amplitudes, [S2, -1j * S2], atol=1e-12)


def test_run_circuit_binding_errors():
    circuit = Circuit(1, (GateOp("RX", 0, angle="theta"),), ("theta",))
    with pytest.raises(BindingError):
        run_circuit(circuit, {}, new_state(1))
    with pytest.raises(BindingError):
        run_circuit(circuit, {"theta": 0.0, "spare": 1.0}, new_state(1))


# --- expectation_z -----------------------------------------------------


def test_expectation_ground_state():
    assert expectation_z(new_state(1), 0) == pytest.approx(1.0, abs=1e-12)


def test_expectation_rx_grid_is_cosine():
    for theta in np.linspace(-2 * np.pi, 2 * np.pi, 100):
        out = apply_gate(new_state(1), GateOp("RX", 0, angle=float(theta)))
        assert abs(expectation_z(out, 0) - np.cos(theta)) < 1e-10


def test_expectation_bell_qubit1_is_zero():
    assert abs(expectation_z(bell_state(), 1)) < 1e-12


def test_expectation_range_on_random_states():
    rng = np.random.default_rng(9)
    for _ in range(50):
        state = random_state(rng, 4)
        for q in range(4):
            assert -1 - 1e-12 <= expectation_z(state, q) <= 1 + 1e-12


def test_expectation_index_error():
    with pytest.raises(IndexError):
        expectation_z(new_state(2), 2)


# --- measurement -------------------------------------------------------


def test_measure_probability_examples():
    assert measure_probability(new_state(1), 0, 1) == pytest.approx(0.0, abs=1e-12)
    plus = apply_gate(new_state(1), GateOp("RX", 0, angle=np.pi / 2))
    assert measure_probability(plus, 0, 1) == pytest.approx(0.5, abs=1e-12)


def test_measure_probability_completeness():
    rng = np.random.default_rng(21)
    for _ in range(20):
        state = random_state(rng, 3)
        for q in range(3):
            total = measure_probability(state, q, 0) + measure_probability(state, q, 1)
            assert abs(total - 1.0) < 1e-12


def test_measure_probability_validates():
    with pytest.raises(IndexError):
        measure_probability(new_state(1), 1, 0)
    with pytest.raises(ValueError):
        measure_probability(new_state(1), 0, 2)


def test_collapse_bell():
    out = collapse(bell_state(), 0, 1)
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1], atol=1e-12)


def test_collapse_impossible_branch():
    with pytest.raises(CollapseError):
        collapse(new_state(1), 0, 1)


def test_collapse_renormalizes():
    plus = apply_gate(new_state(1), GateOp("RX", 0, angle=np.pi / 2))
    out = collapse(plus, 0, 0)
    assert abs(out.norm() - 1.0) < 1e-12
    assert abs(abs(out.amplitudes[0]) - 1.0) < 1e-12


# --- invariants --------------------------------------------------------


def test_norm_preserved_over_1000_random_circuits():
    rng = random.Random(2024)
    for _ in range(1000):
        n = rng.randint(1, 6)
        circuit, params = random_circuit(rng, n, rng.randint(1, 50))
        out = run_circuit(circuit, params, new_state(n))
        assert 1 - 1e-9 <= out.norm() <= 1 + 1e-9


def test_rz_never_changes_probabilities_on_basis_states():
    for basis in range(4):
        amps = np.zeros(4, dtype=complex)
        amps[basis] = 1.0
        state = StateVector(2, amps)
        for q in range(2):
            out = apply_gate(state, GateOp("RZ", q, angle=0.7))
            np.testing.assert_allclose(
                np.abs(out.amplitudes) ** 2, np.abs(amps) ** 2, atol=1e-12
            )


def test_cnot_squared_and_rx_roundtrip_are_identity():
    rng = np.random.default_rng(31)
    state = random_state(rng, 3)
    cnot = GateOp("CNOT", target=2, control=0)
    out = apply_gate(apply_gate(state, cnot), cnot)
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-10)
    theta = 1.234
    out = apply_gate(
        apply_gate(state, GateOp("RX", 1, angle=theta)), GateOp("RX", 1, angle=-theta)
    )
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-10)


def test_statevector_is_immutable_from_outside():
    state = new_state(2)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0.0


# --- batched kernel ----------------------------------------------------


def test_batched_rows_match_single_state_runs():
    rng = random.Random(55)
    np_rng = np.random.default_rng(55)
    circuit, params = random_circuit(rng, 3, 25)
    states = [random_state(np_rng, 3) for _ in range(6)]
    batch = np.stack([s.amplitudes for s in states])
    angles = circuit.bind(params)
    out = run_ops_batched(3, circuit.ops, angles, initial=batch)
    for i, state in enumerate(states):
        single = run_circuit(circuit, params, state)
        np.testing.assert_array_equal(out[i], single.amplitudes)
        assert expectation_z_batched(out, 1)[i] == expectation_z(single, 1)


def test_batched_per_row_angles():
    thetas = np.linspace(0, np.pi, 8)
    out = run_ops_batched(1, (GateOp("RX", 0, angle="t"),), [thetas], batch=8)
    np.testing.assert_allclose(
        expectation_z_batched(out, 0), np.cos(thetas), atol=1e-12
    )
