"""Exception taxonomy shared by all modules."""


class LocalBornError(Exception):
    """Base class for all errors raised by this package."""


class ZeroOperator(LocalBornError):
    """Operator (or state) has vanishing trace, so no dominant subspace exists."""


class DegenerateDominant(LocalBornError):
    """The two largest weights coincide within tolerance.

    This is the measure-zero tie case; it is surfaced rather than broken
    silently so experiments can count occurrences.
    """


class TieOutcome(DegenerateDominant):
    """Local outcome weights for |0> and |1> are equal within tolerance."""


class QuadratureFailure(LocalBornError):
    """Numerical integration did not reach the requested accuracy."""


class NotIdempotent(LocalBornError):
    pass


class NotCommuting(LocalBornError):
    pass


class IncompleteSet(LocalBornError):
    """A cascade was requested on a projector set that is not complete."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
