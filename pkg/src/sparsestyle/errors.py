"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to, so library
callers and the command line agree on what kind of failure happened.
"""


class SparseStyleError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class DataError(SparseStyleError, ValueError):
    """Invalid or inconsistent input data (shapes, names, values)."""

    exit_code = 3


class FormatError(DataError):
    """An artifact file violates its schema, version or numeric contract."""


class BvhParseError(DataError):
    """Malformed BVH text. ``line`` is 1-based, or None at end of input."""

    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class BvhStructureError(DataError):
    """Well-formed BVH whose motion data does not match the hierarchy."""


class NumericalError(SparseStyleError, ArithmeticError):
    """An iterative routine failed to converge or produced non-finite output."""

    exit_code = 4
