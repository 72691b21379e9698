"""Exception hierarchy for rarl-kit."""

from typing import Any, Optional


class RarlKitError(Exception):
    """Root of every error raised by this package."""


class InvalidModelError(RarlKitError, ValueError):
    """A transition/reward/distribution table breaks its invariants."""


class MappingError(InvalidModelError):
    """A state mapping is not surjective or refers to unknown indices."""


class SingularSystemError(RarlKitError, RuntimeError):
    """A linear solve did not reach the residual tolerance."""


class DegenerateSelfLoopError(RarlKitError, ArithmeticError):
    """An abstract self-loop makes a geometric factor undefined."""


class EnumerationCapError(RarlKitError):
    """Exhaustive enumeration would exceed the configured cap (undecided at this scale)."""

    def __init__(self, message: str, size: int, cap: int):
        super().__init__(message)
        self.size = size
        self.cap = cap


class LpIterationLimitError(RarlKitError, RuntimeError):
    """The simplex method hit its iteration cap."""


class RealizationInfeasibleError(RarlKitError):
    """No option satisfies the occupancy constraints of a tuple."""

    def __init__(self, message: str, max_gap: float, tuple_: Optional[Any] = None):
        super().__init__(message)
        self.max_gap = max_gap
        self.tuple = tuple_


class NotEnoughDataError(RarlKitError, RuntimeError):
    """An online realizer was asked for a result before collecting enough samples."""


class InitiationError(RarlKitError, ValueError):
    """An option was started outside its initiation set."""


class SynthesisError(RarlKitError):
    """An abstract model cannot be fitted for the requested discount."""

    def __init__(self, message: str, min_gamma_bar: Optional[float]):
        super().__init__(message)
        self.min_gamma_bar = min_gamma_bar


class ParseError(RarlKitError, ValueError):
    """A text file (environment, abstraction, option, LP dump) is malformed."""

    def __init__(self, message: str, line: int = 0, path: Optional[str] = None):
        where = f"{path or '<text>'}:{line}" if line else (path or "<text>")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path
