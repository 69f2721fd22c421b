"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition or bound."""


class NumericalError(RuntimeError):
    """Raised when an iteration or bracketing procedure fails to converge."""
