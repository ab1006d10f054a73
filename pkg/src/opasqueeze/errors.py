"""Exception hierarchy.

``NumericalError`` subclasses are failures of a computation on valid input
(the CLI maps them to exit code 1); plain ``ValueError`` covers bad input.
"""


class GridMismatchError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class ConvergenceError(NumericalError):
    pass


class ConstraintViolation(NumericalError):
    pass


class PairingError(NumericalError):
    pass


class PhaseAlignmentError(NumericalError):
    def __init__(self, message, defects=None):
        super().__init__(message)
        self.defects = defects


class ValidityWarning(UserWarning):
    """A model is used outside the regime where it is trustworthy."""
