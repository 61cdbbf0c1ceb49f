"""Exception hierarchy.

Data errors (bad input, bad ledger state) and numerical errors (solver or
payoff pathologies) are kept apart so the CLI can map them to exit codes.
"""


class GTProbError(Exception):
    """Base class for all package errors."""


class DataError(GTProbError, ValueError):
    """Input data or arguments are invalid."""


class DomainError(DataError):
    """A parameter lies outside its domain."""


class LabelError(DataError):
    """A record or payoff refers to an undeclared label."""


class EmptyCellError(DataError):
    """A cell of a product family has no records."""


class ExpectationError(DataError):
    """A payoff does not have unit expected value under the forecast."""


class SessionError(DataError):
    """Illegal ledger session state transition."""


class DuplicateSessionError(SessionError):
    pass


class ClosedSessionError(SessionError):
    pass


class OpenSessionError(SessionError):
    """Aggregation was requested over a session that is still open."""


class ReplayError(DataError):
    """A ledger file failed replay verification."""


class NumericalError(GTProbError, ArithmeticError):
    """A numerical procedure cannot produce a trustworthy answer."""


class UnboundedPayoffError(NumericalError):
    """The denominator forecast gives zero mass where the bettor gives positive mass."""


class NonUnimodalError(NumericalError):
    """The log-ratio curve has more than one mode."""


class DegenerateError(NumericalError):
    """A statistic is undefined because the data sit on a boundary."""
