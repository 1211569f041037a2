"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class TruncationError(RuntimeError):
    """Raised when a Fock-space simulation leaks too much population
    into the top truncation levels for the result to be trusted."""
