"""Exception hierarchy shared across the package."""


class SsmPmhError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(SsmPmhError, ValueError):
    """A parameter bundle lies outside the model's valid domain."""


class ConfigurationError(SsmPmhError, ValueError):
    """A proposal or chain configuration is malformed."""


class DegeneracyError(SsmPmhError, ArithmeticError):
    """All particle weights vanished (or became NaN) at some step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InitializationError(SsmPmhError, RuntimeError):
    """The likelihood could not be evaluated at the initial parameters."""


class DiagnosticsError(SsmPmhError, ValueError):
    """Input to a diagnostic is too short or has zero variance."""


class InputError(SsmPmhError, ValueError):
    """Malformed user data; ``row`` is the 1-based data row when known."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
