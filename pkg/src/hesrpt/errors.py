"""Exception types raised across the package."""


class HesrptError(Exception):
    """Base class for all package errors."""


class DomainError(HesrptError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(HesrptError, ValueError):
    """Inputs are well formed but violate an operation's precondition."""


class ConfigError(HesrptError, ValueError):
    pass


class FitError(HesrptError, ValueError):
    pass


class InstanceParseError(HesrptError, ValueError):
    """Malformed instance file. ``line`` is 1-based, or None if not line specific."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SimulationError(HesrptError, RuntimeError):
    pass


class LivelockError(SimulationError):
    """Active jobs remain but none can make progress and no arrivals are pending."""


class OracleRefusal(HesrptError, ValueError):
    """Brute-force search refused because the instance is too large."""
