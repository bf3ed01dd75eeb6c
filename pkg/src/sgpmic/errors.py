"""Exception hierarchy."""


class SgpmicError(Exception):
    """Base class for all package errors."""


class InputError(SgpmicError, ValueError):
    """Malformed data, shapes, or configuration."""


class NumericalError(SgpmicError, ArithmeticError):
    """A computation produced a non-finite or singular intermediate."""


class SingularKernelError(NumericalError):
    """Cholesky of a Gram matrix failed even after jitter escalation."""


class NonFiniteError(NumericalError):
    """Objective or gradient became non-finite.

    ``result`` optionally carries the last finite optimizer state and
    ``iteration`` the outer EM iteration at which the failure happened.
    """

    def __init__(self, message, result=None, iteration=None):
        super().__init__(message)
        self.result = result
        self.iteration = iteration
