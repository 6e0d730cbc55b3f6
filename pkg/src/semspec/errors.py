"""Exception types shared across the package."""


class SemspecError(Exception):
    """Base class for package errors."""


class ValidationError(SemspecError, ValueError):
    """Malformed input data or violated operation precondition."""


class DivergenceError(SemspecError, RuntimeError):
    """Training produced a non-finite loss and was aborted."""
