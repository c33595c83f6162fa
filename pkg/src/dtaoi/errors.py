"""Exception hierarchy.

Two families matter to callers: bad inputs (``InvalidInputError``) and
numerical trouble (``AccuracyError``).  The CLI maps them to exit codes
2 and 3 respectively.
"""


class AoIError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(AoIError, ValueError):
    pass


class DomainError(InvalidInputError):
    """Argument outside the domain of a special function."""


class PoleError(InvalidInputError):
    """Rational function evaluated at (or next to) a pole."""


class StabilityError(InvalidInputError):
    """FCFS queue requested with arrival probability >= service probability."""


class DegenerateModelError(InvalidInputError):
    """Preemptive model in which no packet is ever informative."""


class InconsistentInputsError(InvalidInputError):
    """Component distributions that cannot come from one stationary system."""


class UnsupportedCostError(InvalidInputError):
    """No closed form exists for the requested age function."""


class InsufficientDataError(AoIError):
    """A simulated run produced too few deliveries to estimate anything."""


class AccuracyError(AoIError, ArithmeticError):
    """A truncation or cross-check tolerance could not be met."""


class ConvergenceError(AccuracyError):
    pass


class DivergenceError(AccuracyError):
    """The requested expectation is infinite."""
