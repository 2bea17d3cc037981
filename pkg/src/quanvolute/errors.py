"""Exception types shared across the package.

All quanvolute-specific failures derive from QuanvoluteError so callers can
catch the whole family. Plain builtin exceptions (IndexError, ValueError)
are still raised where they are the natural fit, e.g. out-of-range qubit
indices.
"""


class QuanvoluteError(Exception):
    """Base class for all quanvolute errors."""


class CapacityError(QuanvoluteError, ValueError):
    """Qubit count outside the supported range."""


class BindingError(QuanvoluteError, ValueError):
    """Parameter binding does not cover a circuit's slots exactly."""


class CollapseError(QuanvoluteError, ValueError):
    """Attempted to collapse a qubit onto a zero-probability outcome."""


class ShapeError(QuanvoluteError, ValueError):
    """Array shape inconsistent with the operation's contract."""


class UnsupportedInputError(QuanvoluteError, ValueError):
    """Input kind not handled by this layer (e.g. multi-channel quanv input)."""


class UnsupportedGeneratorError(QuanvoluteError, ValueError):
    """A parameter slot is bound to a gate with no shift rule."""


class FormatError(QuanvoluteError, ValueError):
    """A file's contents do not match its declared format."""


class DataConsistencyError(QuanvoluteError, ValueError):
    """Mutually inconsistent data files (e.g. image/label count mismatch)."""


class TrainingDivergenceError(QuanvoluteError, RuntimeError):
    """Training produced a non-finite loss or gradient."""
