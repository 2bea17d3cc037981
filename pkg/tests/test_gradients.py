"""Shift-rule gradients against analytic values and finite differences."""

import numpy as np
import pytest

from quanvolute.circuits import Circuit, GateOp
from quanvolute.errors import UnsupportedGeneratorError
from quanvolute.gradients import (
    ParameterVector,
    finite_difference_oracle,
    parameter_shift_grad,
    shift_plan,
)
from quanvolute.quanv import filter_circuit
from quanvolute.statevector import Observable, new_state

from helpers import random_state


def rx_only():
    return Circuit(1, (GateOp("RX", 0, angle="theta"),), ("theta",))


def fig3_instance(rng):
    """The quanv filter circuit with a random full binding."""
    circuit = filter_circuit()
    values = np.concatenate(
        [rng.uniform(0, np.pi, 4), rng.uniform(-np.pi, np.pi, 6)]
    )
    return circuit, ParameterVector(circuit.param_names, values)


def test_rx_gradient_is_minus_sine():
    grad = parameter_shift_grad(
        rx_only(), ParameterVector(("theta",), [np.pi / 2]), Observable(0), new_state(1)
    )
    assert grad[0] == pytest.approx(-1.0, abs=1e-12)


def test_rx_gradient_zero_at_extremum():
    grad = parameter_shift_grad(
        rx_only(), ParameterVector(("theta",), [0.0]), Observable(0), new_state(1)
    )
    assert grad[0] == pytest.approx(0.0, abs=1e-12)


def test_filter_circuit_gradients_match_finite_differences():
    rng = np.random.default_rng(17)
    circuit = filter_circuit()
    obs = Observable(0)
    for _ in range(10):
        _, params = fig3_instance(rng)
        ps = parameter_shift_grad(circuit, params, obs, new_state(4))
        fd = finite_difference_oracle(circuit, params, obs, new_state(4), h=1e-4)
        np.testing.assert_allclose(ps, fd, atol=1e-5)


def test_fd_oracle_analytic_case():
    fd = finite_difference_oracle(
        rx_only(), ParameterVector(("theta",), [np.pi / 2]), Observable(0), new_state(1), h=1e-4
    )
    assert fd[0] == pytest.approx(-1.0, abs=1e-7)


def test_fd_oracle_empty_params():
    circuit = Circuit(1, (GateOp("X", 0),), ())
    fd = finite_difference_oracle(circuit, ParameterVector((), []), Observable(0), new_state(1))
    assert fd.shape == (0,)


@pytest.mark.parametrize("h", [1e-7, 0.5])
def test_fd_oracle_h_domain(h):
    with pytest.raises(ValueError):
        finite_difference_oracle(
            rx_only(), ParameterVector(("theta",), [0.1]), Observable(0), new_state(1), h=h
        )


def test_light_cone_gradient_is_zero():
    # a rotation on qubit 1 can never reach Z on qubit 0 without entanglers
    circuit = Circuit(
        2,
        (GateOp("RX", 1, angle="far"), GateOp("RX", 0, angle="near")),
        ("far", "near"),
    )
    grad = parameter_shift_grad(
        circuit, ParameterVector(("far", "near"), [0.8, 0.3]), Observable(0), new_state(2)
    )
    assert abs(grad[0]) < 1e-10
    assert grad[1] == pytest.approx(-np.sin(0.3), rel=1e-10)


def test_fd_converges_quadratically_to_shift_value():
    rng = np.random.default_rng(4)
    circuit, params = fig3_instance(rng)
    obs = Observable(0)
    ps = parameter_shift_grad(circuit, params, obs, new_state(4))
    err = {
        h: np.max(np.abs(finite_difference_oracle(circuit, params, obs, new_state(4), h=h) - ps))
        for h in (1e-2, 1e-3)
    }
    # halving h by 10 should shrink the error by ~100; allow slack for noise
    assert err[1e-3] < err[1e-2] / 30.0


def test_shift_plan_kinds():
    assert len(shift_plan("RX")) == 2
    assert len(shift_plan("CRZ")) == 4
    with pytest.raises(UnsupportedGeneratorError):
        shift_plan("CNOT")


def test_unbound_slot_is_rejected():
    with pytest.raises(UnsupportedGeneratorError):
        parameter_shift_grad(
            rx_only(), ParameterVector(("theta", "ghost"), [0.1, 0.2]), Observable(0), new_state(1)
        )


def test_parameter_vector_validation():
    with pytest.raises(ValueError):
        ParameterVector(("a", "a"), [0.0, 1.0])
    with pytest.raises(ValueError):
        ParameterVector(("a",), [0.0, 1.0])


def test_controlled_rotation_needs_four_term_rule():
    """On a superposed control the naive two-term rule is biased; the
    implemented rule must stay within FD tolerance anyway."""
    circuit = Circuit(
        2,
        (GateOp("RX", 1, angle="prep"), GateOp("CRX", 0, control=1, angle="theta")),
        ("prep", "theta"),
    )
    params = ParameterVector(("prep", "theta"), [1.1, 0.7])
    obs = Observable(0)
    ps = parameter_shift_grad(circuit, params, obs, new_state(2))
    fd = finite_difference_oracle(circuit, params, obs, new_state(2), h=1e-4)
    np.testing.assert_allclose(ps, fd, atol=1e-6)
    # the two-term estimate differs measurably here, which is why CRX/CRZ
    # use the four-term plan
    def f(theta):
        from quanvolute.statevector import expectation_z, run_circuit

        return expectation_z(
            run_circuit(circuit, {"prep": 1.1, "theta": theta}, new_state(2)), 0
        )

    two_term = 0.5 * (f(0.7 + np.pi / 2) - f(0.7 - np.pi / 2))
    assert abs(two_term - fd[1]) > 1e-3
