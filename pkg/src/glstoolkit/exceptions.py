"""Error hierarchy shared by all GLS Toolkit modules.

Precondition errors derive from ``ValueError`` and computational failures
from ``ArithmeticError``, so callers that only know the builtin exceptions
still catch them. The command-line front end maps the two branches to exit
statuses 2 and 1 respectively.
"""


class GLSError(Exception):
    """Base class for all errors raised by the toolkit.
    """


class PreconditionError(GLSError, ValueError):
    """An input violates a documented precondition.
    """


class ComputationError(GLSError, ArithmeticError):
    """A well-formed computation failed to produce a finite answer.
    """


class DomainError(PreconditionError):
    """An argument lies outside the domain of the operation.
    """


class InvalidFunctionError(PreconditionError):
    """A function takes non-positive or non-finite values where it must not.
    """


class IncompatibleSupportError(PreconditionError):
    """Two generating functions do not share the same support bound.
    """


class IncompatibleGridError(PreconditionError):
    """Tabulated objects that must share a grid do not.
    """


class NoClosedFormError(PreconditionError):
    """No closed-form constant is known for the requested family.
    """


class OutOfValidityError(PreconditionError):
    """A tail bound was requested below its validity threshold.

    :param message: The diagnostic message.
    :type message: str
    :param threshold: The smallest admissible argument.
    :type threshold: float
    """

    def __init__(self, message, threshold):
        super().__init__(message)
        self.threshold = threshold


class UnboundedMomentError(ComputationError):
    """The moment integral of a tail envelope diverges.

    :param message: The diagnostic message.
    :type message: str
    :param p: The first grid exponent for which the integral diverges.
    :type p: float
    """

    def __init__(self, message, p):
        super().__init__(message)
        self.p = p


class NoFiniteValueError(ComputationError):
    """Every candidate value of an infimum was infinite.
    """


class IndeterminateRatioError(ComputationError):
    """A ratio has a vanishing denominator and a positive numerator.
    """
