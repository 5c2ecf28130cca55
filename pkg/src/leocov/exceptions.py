"""Exception hierarchy shared by all leocov modules."""


class LeoCovError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(LeoCovError, ValueError):
    """An argument violates the documented precondition of an operation."""


class DomainError(InvalidArgumentError):
    """A numeric argument lies outside the domain of a formula (e.g. log of a non-positive value)."""


class ConditioningError(LeoCovError):
    """The coverage event cannot be conditioned on: no satellite is visible."""


class ConvergenceError(LeoCovError, ArithmeticError):
    """An iterative solver failed to reach its tolerance."""


class InputFormatError(LeoCovError, ValueError):
    """A file or text input is malformed.

    ``line`` is the 1-based line (or 0 for a header row) where the problem was found.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TleParseError(InputFormatError):
    """A two-line element record failed validation."""
