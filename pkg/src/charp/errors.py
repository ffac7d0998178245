from __future__ import annotations


class CharpError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CharpError):
    """Malformed or inconsistent user input."""


class ParseError(InputError):
    def __init__(self, message: str, line: int = 1, column: int = 1, where: str = ""):
        self.line = line
        self.column = column
        self.where = where
        loc = f"{where}: " if where else ""
        super().__init__(f"{loc}line {line}, column {column}: {message}")


class NotPrime(InputError):
    pass


class PrimeTooSmall(InputError):
    pass


class RingMismatch(CharpError):
    pass


class NotDescendable(CharpError):
    """A polynomial is not a polynomial in the p-th powers of the variables."""


class NotClosed(CharpError):
    pass


class DegreeTooHigh(CharpError):
    pass


class NotIntegrable(InputError):
    pass


class NotCommuting(InputError):
    pass


class NotNilpotent(CharpError):
    pass


class InvalidLift(InputError):
    pass


class UntwistFailed(CharpError):
    pass


class DescentBasisNotFound(CharpError):
    pass


class NotStabilized(CharpError):
    pass


class TruncationOverflow(CharpError):
    pass


class ProblemTooLarge(InputError):
    pass


class NonzeroPCurvature(CharpError):
    """Descent was requested for a connection whose p-curvature does not vanish."""
