"""Exception hierarchy shared by every module."""


class CakeError(Exception):
    """Base class for all errors raised by familycake."""


class DomainError(CakeError, ValueError):
    """A piece or point lies outside the cake."""


class RangeError(CakeError, ValueError):
    """A mark target exceeds the value remaining to the right of the start."""


class DegenerateAgentError(CakeError, ValueError):
    """Normalization was requested for an agent whose total value is zero."""


class ParseError(CakeError, ValueError):
    """An input document could not be decoded."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class InvalidPartition(CakeError, ValueError):
    """An allocation does not partition the cake."""


class BudgetExhausted(CakeError):
    """No exact division was found within the component budget."""


class ParameterError(CakeError, ValueError):
    pass


class ProtocolFault(CakeError):
    """A protocol emitted a malformed or out-of-range query."""


class AdversaryBug(CakeError):
    """The adversary state lets the protocol reach an average piece."""


class HarnessFailure(CakeError):
    """The solver handed to the reduction harness returned a wrong answer."""


class ScaleGuardError(CakeError):
    """The requested exhaustive search is larger than the configured limit."""


class BoundViolation(CakeError):
    """An exhaustive search result contradicts a claimed lower bound."""
