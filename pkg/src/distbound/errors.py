"""Exception hierarchy shared by every module.

Domain errors (bad input, a bound's precondition not met) derive from
:class:`DomainError`; exhausting an enumeration budget raises
:class:`BudgetError`.  The CLI maps the two families to different exit codes.
"""


class DistboundError(Exception):
    """Base class for all package errors."""


class DomainError(DistboundError, ValueError):
    """Input is outside the domain of the requested operation."""


class InvalidInputError(DomainError):
    pass


class InvalidAlphabetError(InvalidInputError):
    pass


class InvalidChannelError(InvalidInputError):
    pass


class InvalidCompositionError(InvalidInputError):
    pass


class UndefinedMinDistanceError(InvalidInputError):
    pass


class InfiniteDistanceError(DomainError):
    """An operation that needs finite distances received an infinite entry."""


class NotEmbeddableError(DomainError):
    """The distance is not a squared Euclidean distance.

    ``witness`` is a zero-sum vector ``c`` with ``sum c(x)c(x')d(x,x') > 0``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class WrongClassError(DomainError):
    """The distance does not belong to the class a bound requires."""


class WrongSymmetryError(WrongClassError):
    pass


class ConditionNotMetError(DomainError):
    """A rate condition of a bound is violated, so the bound is not asserted."""


class BudgetError(DistboundError):
    """An exhaustive computation would exceed the configured size budget."""
