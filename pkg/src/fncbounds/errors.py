"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates the mathematical domain of an operation."""


class ConvergenceError(ArithmeticError):
    """A numerical procedure failed to meet its tolerance.

    Attributes:
        bracket: best bracket ``(lo, hi)`` found before giving up, if any.
        residual: the residual at the best point, if known.
    """

    def __init__(self, message, bracket=None, residual=None):
        super().__init__(message)
        self.bracket = bracket
        self.residual = residual
