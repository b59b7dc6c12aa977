"""Exception hierarchy shared by the numerical modules."""


class GdepError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(GdepError, ValueError):
    pass


class InvalidStateError(GdepError, ValueError):
    pass


class NoBoundStateError(GdepError):
    pass


class IterationLimitError(GdepError):
    pass


class NoMinimumError(GdepError):
    pass


class ReferenceParseError(GdepError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScfOscillationError(GdepError):
    """Raised when the SCF residual stops decreasing.

    ``suggested_mixing`` carries a smaller mixing factor to retry with and
    ``solution`` the last (unconverged) iterate.
    """

    def __init__(self, message: str, suggested_mixing: float, solution=None):
        super().__init__(f"{message}; retry with mixing <= {suggested_mixing:g}")
        self.suggested_mixing = suggested_mixing
        self.solution = solution


class ConsistencyError(GdepError):
    pass
