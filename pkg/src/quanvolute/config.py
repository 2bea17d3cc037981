"""Experiment configuration: defaults, flat key=value files, CLI overrides.

Config files hold one `key = value` pair per line; `#` starts a comment.
Command-line flags override file values, which override the defaults below.
The full key list is documented in the README.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import FormatError

MODEL_KINDS = ("qcnn", "cnn", "fc")

DATA_DIR_ENV = "QUANVOLUTE_DATA_DIR"


@dataclass
class TrainConfig:
    model: str = "qcnn"
    epochs: int = 5
    samples_per_epoch: int = 2500
    seed: int = 0
    lr_classical: float = 1e-3
    lr_quantum: float = 1e-2
    channels: int = 8
    stride: int = 1
    batch_size: int = 25
    data_dir: str = ""
    out_dir: str = "."
    eval_size: int = 500
    full_eval: bool = False
    threads: int = 1
    optimizer: str = "adam"
    cnn_relu: bool = False
    timings: bool = False

    def validate(self) -> None:
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        for name in ("epochs",):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("samples_per_epoch", "channels", "stride", "batch_size", "eval_size", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("lr_classical", "lr_quantum"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")

    def resolve_data_dir(self) -> Path:
        """Explicit data_dir, else the QUANVOLUTE_DATA_DIR environment variable."""
        if self.data_dir:
            return Path(self.data_dir)
        env = os.environ.get(DATA_DIR_ENV, "")
        if env:
            return Path(env)
        raise FileNotFoundError(
            f"no data directory: pass --data-dir or set {DATA_DIR_ENV}"
        )


_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: cannot parse {raw!r} as bool")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config_file(path) -> dict:
    """Parse a flat key=value config file into a field dict."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise FormatError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return values


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> TrainConfig:
    """Defaults <- config file <- CLI overrides (None values skipped)."""
    merged: dict = {}
    if file_values:
        merged.update(file_values)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    config = TrainConfig(**merged)
    config.validate()
    return config
