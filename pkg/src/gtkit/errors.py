class ParameterError(ValueError):
    """Raised when an argument lies outside the documented domain."""


class UsageError(ParameterError):
    """Raised when a valid argument is routed to the wrong operation."""


class LPDefectError(RuntimeError):
    """The LP solver reached a state that a bounded program cannot produce."""
