"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An argument violates an operation's precondition."""


class ValidationError(ValueError):
    """A container was built from data that breaks its invariants."""


class ParseError(ValueError):
    """A grid or sinogram file could not be parsed.

    ``location`` is a human readable position such as ``"line 3"`` or
    ``"offset 8"``.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class NumericalFailure(ArithmeticError):
    """Non-finite values appeared during an iterative solve."""

    def __init__(self, message, iteration):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")


class DegenerateInput(InvalidArgument):
    """Input carries no usable signal (for example an all-zero template)."""
