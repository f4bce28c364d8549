"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: validation-type errors exit 1, I/O
errors exit 2, contract violations exit 3.
"""


class PushrankError(Exception):
    """Base class for all package errors."""


class ValidationError(PushrankError):
    """Input or state fails a documented precondition or invariant."""


class ParseError(ValidationError):
    """Malformed input text; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(ValidationError):
    """Requested dense computation exceeds the configured size gate."""


class ConfigError(ValidationError):
    """Estimator configuration is out of range or inconsistent."""


class ContractViolationError(PushrankError):
    """An internal caller broke a module contract; indicates a bug."""
