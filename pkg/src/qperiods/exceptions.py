"""Exception hierarchy.

Two families matter to callers: :class:`DomainValidationError` (the input is
well-formed but violates a mathematical precondition, e.g. a model that is
not convenient) and :class:`ModelFormatError` (the input could not be read
at all). The CLI maps them to exit codes 2 and 1 respectively.
"""


class QPeriodsError(Exception):
    """Base class for all errors raised by this package."""


class DomainValidationError(QPeriodsError, ValueError):
    """Input violates a mathematical precondition."""


class NotConvenientError(DomainValidationError):
    """Newton polytope does not contain the origin in its interior."""


class NegativeCoefficientError(DomainValidationError):
    pass


class DimensionMismatchError(DomainValidationError):
    pass


class ModelFormatError(QPeriodsError, ValueError):
    """Malformed model or spec file; the message names the offending field."""


class IndexDetectionError(QPeriodsError):
    pass


class ConvergenceError(QPeriodsError):
    """Iterative solver stopped before reaching its tolerance.

    The best iterate is attached as ``best`` so callers can inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UncertifiedEvaluationError(QPeriodsError):
    """Series truncation could not be certified within the term budget."""


class DegenerateWindowError(QPeriodsError):
    """Head and tail masses vanish at every grid point."""


class WhitelistError(DomainValidationError):
    """A hypothesis-bearing input is not on the supported whitelist."""


class InsufficientDataError(QPeriodsError, ValueError):
    pass
