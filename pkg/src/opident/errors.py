"""Exception hierarchy shared by every opident module."""


class OpidentError(Exception):
    """Base class for all errors raised by opident."""


class InvalidInputError(OpidentError, ValueError):
    """An argument violates a documented precondition."""


class ShapeError(InvalidInputError):
    """Array dimensions do not match the network or dataset layout."""


class UnsupportedRangeError(InvalidInputError):
    """A column holds values that divide-by-max scaling cannot map into [0, 1]."""


class DegenerateColumnError(InvalidInputError):
    """A column has a zero maximum, so it cannot be normalized."""


class InvalidProfileError(InvalidInputError):
    """A motion profile cannot be realized within its horizon."""


class ParseError(OpidentError, ValueError):
    """A text file could not be parsed.

    Attributes:
        line: 1-based line number of the offending row, or None when the
            problem is not tied to a single line.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class NumericalFailure(OpidentError, ArithmeticError):
    """An iterative solver broke down (singular system, non-finite state)."""


class IntegrationFailure(NumericalFailure):
    """The point-kinetics integrator produced a non-finite state."""


class NoValidConfigError(OpidentError):
    """Every configuration in a sweep report is unstable."""
