"""Exception types shared across the package."""


class SphardyError(Exception):
    """Base class for all errors raised by sphardy."""


class InvalidArgument(SphardyError, ValueError):
    pass


class PreconditionViolation(SphardyError, ValueError):
    pass


class InternalConsistencyError(SphardyError, RuntimeError):
    """An oracle disagreed with a stored quantity beyond its tolerance."""


class NumericalFailure(SphardyError, RuntimeError):
    pass


class NotInDomain(SphardyError):
    """A potential is not in the discrete domain of a continuation operator.

    The attained fit residual is kept on the exception so callers can decide
    whether to relax the membership tolerance.
    """

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual
