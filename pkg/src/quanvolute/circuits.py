"""Gate and circuit data model.

Qubit-index convention used everywhere in this package (simulator, oracle,
printing): qubit q is bit q of the basis-state index, so qubit 0 is the
least significant bit. Basis index 5 = 0b101 means qubits 0 and 2 are |1>.

A GateOp's angle is either a fixed float (radians) or a string naming a
parameter slot bound at run time. Each slot may appear in at most one gate
of a circuit; weight sharing is expressed by replicating gates with distinct
slot names and summing their gradients on the caller's side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BindingError

GATE_KINDS = ("RX", "RZ", "X", "CRX", "CRZ", "CNOT")
ROTATION_KINDS = frozenset({"RX", "RZ", "CRX", "CRZ"})
CONTROLLED_KINDS = frozenset({"CRX", "CRZ", "CNOT"})


@dataclass(frozen=True)
class GateOp:
    """One gate application: kind, target, optional control, optional angle."""

    kind: str
    target: int
    control: int | None = None
    angle: float | str | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in CONTROLLED_KINDS:
            if self.control is None:
                raise ValueError(f"{self.kind} requires a control qubit")
            if self.control == self.target:
                raise ValueError(f"{self.kind} control equals target ({self.target})")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle or slot name")
            if isinstance(self.angle, float) and not np.isfinite(self.angle):
                raise ValueError(f"non-finite fixed angle {self.angle}")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def slot(self) -> str | None:
        """Parameter slot name, or None for fixed/angle-free gates."""
        return self.angle if isinstance(self.angle, str) else None


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over n_qubits with named parameter slots.

    Invariants enforced at construction: every slot referenced by an op
    appears exactly once in param_names, each slot is referenced by exactly
    one op, and all qubit indices are in range.
    """

    n_qubits: int
    ops: tuple[GateOp, ...]
    param_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "param_names", tuple(self.param_names))
        if len(set(self.param_names)) != len(self.param_names):
            raise ValueError("duplicate parameter slot names")
        seen: set[str] = set()
        for op in self.ops:
            if not (0 <= op.target < self.n_qubits):
                raise IndexError(f"target {op.target} out of range for {self.n_qubits} qubits")
            if op.control is not None and not (0 <= op.control < self.n_qubits):
                raise IndexError(f"control {op.control} out of range for {self.n_qubits} qubits")
            slot = op.slot
            if slot is not None:
                if slot in seen:
                    raise ValueError(f"slot {slot!r} referenced by more than one gate")
                seen.add(slot)
        declared = set(self.param_names)
        if seen != declared:
            raise ValueError(
                f"slot mismatch: ops reference {sorted(seen)}, declared {sorted(declared)}"
            )

    def bind(self, params: dict[str, float]) -> list[float | None]:
        """Resolve each op's angle against a name->value map.

        Returns a per-op list of angles (None for angle-free gates). The map
        must cover the circuit's slots exactly.
        """
        missing = set(self.param_names) - set(params)
        extra = set(params) - set(self.param_names)
        if missing or extra:
            raise BindingError(
                f"parameter binding mismatch: missing {sorted(missing)}, extra {sorted(extra)}"
            )
        angles: list[float | None] = []
        for op in self.ops:
            if op.slot is not None:
                angles.append(float(params[op.slot]))
            elif op.angle is not None:
                angles.append(float(op.angle))
            else:
                angles.append(None)
        return angles


def rx_matrix(theta: float) -> np.ndarray:
    """RX(theta) = [[cos(t/2), -i sin(t/2)], [-i sin(t/2), cos(t/2)]]."""
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    """RZ(theta) = diag(e^{-i t/2}, e^{+i t/2})."""
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=np.complex128
    )


X_MATRIX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


def gate_block(kind: str, angle: float | None) -> np.ndarray:
    """2x2 matrix applied to the target qubit (on the control=|1> subspace
    for controlled kinds)."""
    if kind == "RX" or kind == "CRX":
        return rx_matrix(angle)
    if kind == "RZ" or kind == "CRZ":
        return rz_matrix(angle)
    if kind == "X" or kind == "CNOT":
        return X_MATRIX
    raise ValueError(f"unknown gate kind {kind!r}")
