"""Versioned plain-text parameter checkpoints.

Format: header line `quanvolute-ckpt v1`, then one line per parameter:

    <name> <dim0,dim1,...> <v0> <v1> ...

Values are row-major decimal floats printed with 17 significant digits,
which round-trips float64 exactly; save -> load -> save reproduces the file
byte for byte. Parameters are written in sorted name order so the encoding
is canonical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError

HEADER = "quanvolute-ckpt v1"


def save_checkpoint(path, params: dict[str, np.ndarray]) -> None:
    lines = [HEADER]
    for name in sorted(params):
        arr = np.asarray(params[name], dtype=np.float64)
        if " " in name:
            raise ValueError(f"parameter name {name!r} contains a space")
        shape = ",".join(str(d) for d in arr.shape)
        values = " ".join(f"{v:.17g}" for v in arr.reshape(-1))
        lines.append(f"{name} {shape} {values}")
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def load_checkpoint(path) -> dict[str, np.ndarray]:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise FormatError(f"{path}: missing checkpoint header {HEADER!r}")
    params: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(" ")
        if len(fields) < 2:
            raise FormatError(f"{path}:{lineno}: malformed parameter line")
        name, shape_text = fields[0], fields[1]
        try:
            shape = tuple(int(d) for d in shape_text.split(",")) if shape_text else ()
            values = np.array([float(v) for v in fields[2:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        expected = int(np.prod(shape)) if shape else 1
        if values.size != expected:
            raise FormatError(
                f"{path}:{lineno}: {name} declares shape {shape} but has {values.size} values"
            )
        if name in params:
            raise FormatError(f"{path}:{lineno}: duplicate parameter {name!r}")
        params[name] = values.reshape(shape)
    return params
