"""Exception types shared across the package.

The CLI maps these onto its exit codes, so every failure a user can trigger
should surface as one of them.
"""


class WaveCascadeError(Exception):
    """Base class for all package errors."""


class ExpressionError(WaveCascadeError, ValueError):
    """Malformed initial-data expression (syntax, identifier or arity)."""

    def __init__(self, message, offset=None, expected=None):
        self.offset = offset
        self.expected = expected
        if offset is not None:
            message = f"{message} at offset {offset}"
        if expected is not None:
            message = f"{message}, expected {expected}"
        super().__init__(message)


class DomainError(WaveCascadeError, ArithmeticError):
    """Evaluation left the real domain (division by zero, sqrt(-1), overflow)."""


class QuadratureError(WaveCascadeError, ArithmeticError):
    """Adaptive quadrature failed to reach tolerance within max_depth."""


class BoundViolation(WaveCascadeError, ValueError):
    """A supplied sup-norm bound was exceeded by an evaluated value."""


class BranchingError(WaveCascadeError, ValueError):
    """Offspring law violates a validity condition."""


class HorizonError(WaveCascadeError, ValueError):
    """Requested time is outside the bounded-factor horizon T*."""


class ConvergenceError(WaveCascadeError, ArithmeticError):
    """Picard iteration did not converge; carries the last iterate."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConfigError(WaveCascadeError, ValueError):
    """Invalid configuration; ``problems`` lists (json_path, message) pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{path}: {msg}" for path, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
