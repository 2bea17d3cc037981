"""Shared test utilities: random circuit generation and slow reference paths."""

from __future__ import annotations

import random

import numpy as np

from quanvolute.circuits import Circuit, GateOp
from quanvolute.qcnn import ConvStageSpec, QcnnModel
from quanvolute.statevector import (
    StateVector,
    collapse,
    expectation_z,
    measure_probability,
    run_batch_transposed,
)

ONE_QUBIT_KINDS = ("RX", "RZ", "X")
TWO_QUBIT_KINDS = ("CRX", "CRZ", "CNOT")


def random_circuit(rng: random.Random, n_qubits: int, n_gates: int) -> tuple[Circuit, dict]:
    """Random circuit over the full gate set plus a matching binding."""
    ops = []
    names = []
    for g in range(n_gates):
        if n_qubits == 1 or rng.random() < 0.5:
            kind = rng.choice(ONE_QUBIT_KINDS)
            target = rng.randrange(n_qubits)
            if kind == "X":
                ops.append(GateOp(kind, target))
            else:
                slot = f"s{g}"
                names.append(slot)
                ops.append(GateOp(kind, target, angle=slot))
        else:
            kind = rng.choice(TWO_QUBIT_KINDS)
            target = rng.randrange(n_qubits)
            control = rng.choice([q for q in range(n_qubits) if q != target])
            if kind == "CNOT":
                ops.append(GateOp(kind, target, control=control))
            else:
                slot = f"s{g}"
                names.append(slot)
                ops.append(GateOp(kind, target, control=control, angle=slot))
    circuit = Circuit(n_qubits, tuple(ops), tuple(names))
    params = {name: rng.uniform(-np.pi, np.pi) for name in names}
    return circuit, params


def random_state(rng: np.random.Generator, n_qubits: int) -> StateVector:
    amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


def qcnn_branch_forward(model: QcnnModel, values: np.ndarray, state: StateVector) -> float:
    """Explicit branch-and-collapse evaluation of measure_correct pooling.

    Measures each pool source, applies the correction block on the sink only
    in the |1> branch, and returns the probability-weighted readout over all
    branches. This is the slow semantic reference the deferred-measurement
    forward pass must reproduce.
    """
    binding = model.bind_shared(values)
    head_start = model.stages[-1].op_range[1]
    head_ops = model.circuit.ops[head_start:]

    def run_segment(sv: StateVector, ops) -> StateVector:
        angles = [binding[op.slot] if op.slot else op.angle for op in ops]
        amps_t = run_batch_transposed(
            model.n_qubits, ops, angles, initial_t=sv.amplitudes[:, None]
        )
        return StateVector(model.n_qubits, amps_t[:, 0])

    def recurse(sv: StateVector, stage_idx: int, prob: float) -> float:
        if stage_idx == len(model.stages):
            final = run_segment(sv, head_ops)
            return prob * expectation_z(final, model.readout_qubit)
        stage = model.stages[stage_idx]
        ops = model.circuit.ops[stage.op_range[0] : stage.op_range[1]]
        if isinstance(stage, ConvStageSpec):
            return recurse(run_segment(sv, ops), stage_idx + 1, prob)

        def pool_pairs(sv: StateVector, pair_idx: int, prob: float) -> float:
            if pair_idx == len(stage.pairs):
                return recurse(sv, stage_idx + 1, prob)
            source, _sink = stage.pairs[pair_idx]
            pair_ops = ops[2 * pair_idx : 2 * pair_idx + 2]
            total = 0.0
            for outcome in (0, 1):
                p = measure_probability(sv, source, outcome)
                if p <= 1e-12:
                    continue
                branch = collapse(sv, source, outcome)
                if outcome == 1:
                    corrections = [
                        GateOp(op.kind[1:], target=op.target, angle=binding[op.slot])
                        for op in pair_ops
                    ]
                    branch = run_segment(branch, corrections)
                total += pool_pairs(branch, pair_idx + 1, prob * p)
            return total

        return pool_pairs(sv, 0, prob)

    return recurse(state, 0, 1.0)
