class NormRepError(Exception):
    """Base class for all package errors."""


class ValidationError(NormRepError, ValueError):
    """Bad input: wrong shapes, missing parameters, unsupported problem rows."""


class ShapeError(ValidationError):
    pass


class NonFiniteError(ValidationError):
    pass


class ZeroMatrixError(ValidationError):
    pass


class InfeasibleError(ValidationError):
    """The target does not lie in the column space of the dictionary."""


class NumericalError(NormRepError, ArithmeticError):
    """A numerical routine failed to converge."""


class SvdConvergenceError(NumericalError):
    pass


class RootFindingError(NumericalError):
    pass
