"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command-line front end.
"""


class NeedletError(Exception):
    exit_code = 4


class ParameterError(NeedletError, ValueError):
    """Input outside the mathematical domain (e.g. ``alpha <= -1/2``)."""

    exit_code = 2


class CapacityError(NeedletError):
    """Requested degree or level exceeds what a table/system was built for."""

    exit_code = 3


class AccuracyError(NeedletError):
    """A quadrature rule cannot integrate the declared input exactly."""

    exit_code = 4


class NumericError(NeedletError, ArithmeticError):
    exit_code = 4


class AdmissibilityError(NeedletError, ValueError):
    """Cutoff functions violating positivity or the Calderon condition."""

    exit_code = 2


class ShapeError(NeedletError, ValueError):
    exit_code = 2


class DegenerateError(NeedletError, ValueError):
    """Zero input where a non-trivial one is required (e.g. a rate fit)."""

    exit_code = 4


class ParseError(NeedletError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
