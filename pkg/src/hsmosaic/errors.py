"""Exception types shared across the package.

The CLI maps these onto exit codes: input/format problems exit with 2,
numeric failures with 3.
"""


class HsiError(Exception):
    """Base class for all package errors."""


class ValidationError(HsiError, ValueError):
    """A domain type invariant was violated at construction time."""


class FormatError(HsiError, ValueError):
    """A file could not be parsed; ``field`` names the offending header field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ShapeError(HsiError, ValueError):
    """Operands passed to an operation have incompatible shapes."""


class DegenerateError(HsiError, ArithmeticError):
    """A numeric procedure cannot proceed (rank deficiency, no overlap, ...)."""


class MetricError(HsiError, ArithmeticError):
    """A metric is undefined for the given inputs (e.g. PSNR of identical images)."""
