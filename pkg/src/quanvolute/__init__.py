"""quanvolute: hybrid quantum-classical learning on a dense statevector simulator.

Subpackage map:

* statevector / circuits / oracle - few-qubit simulation primitives and the
  brute-force dense-unitary test oracle
* gradients - parameter-shift rules with a finite-difference oracle
* quanv - the learnable 4-qubit quantum convolution layer
* nn - from-scratch dense / conv / softmax layers and optimizers
* qcnn - the reversed-MERA quantum CNN and its synthetic task
* mnist / synthdigits - IDX data pipeline and a synthetic stand-in generator
* models / config / checkpoint / cli - the experiment harness
"""

__version__ = "0.1.0"

from .circuits import Circuit, GateOp
from .gradients import ParameterVector, finite_difference_oracle, parameter_shift_grad
from .oracle import dense_unitary_oracle
from .qcnn import QcnnModel, build_qcnn, qcnn_forward, synth_dataset, train_qcnn
from .quanv import QuanvFilter, QuanvLayer, encode_window, filter_forward, layer_backward, layer_forward
from .statevector import (
    Observable,
    StateVector,
    apply_gate,
    collapse,
    expectation_z,
    measure_probability,
    new_state,
    run_circuit,
)

__all__ = [
    "Circuit",
    "GateOp",
    "Observable",
    "ParameterVector",
    "QcnnModel",
    "QuanvFilter",
    "QuanvLayer",
    "StateVector",
    "apply_gate",
    "build_qcnn",
    "collapse",
    "dense_unitary_oracle",
    "encode_window",
    "expectation_z",
    "filter_forward",
    "finite_difference_oracle",
    "layer_backward",
    "layer_forward",
    "measure_probability",
    "new_state",
    "parameter_shift_grad",
    "qcnn_forward",
    "run_circuit",
    "synth_dataset",
    "train_qcnn",
]
