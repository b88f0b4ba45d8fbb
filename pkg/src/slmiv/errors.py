"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and the process exit
status the command-line front end maps it to (3 = domain, 4 = numerical).
"""


class SlmError(Exception):
    code = "Error"
    exit_status = 4


class DomainError(SlmError, ValueError):
    code = "DomainError"
    exit_status = 3


class OutOfBoundsError(DomainError):
    """Option price outside the no-static-arbitrage region."""

    code = "OutOfBounds"


class NonExistenceError(DomainError):
    """Call-implied volatility requested below the existence boundary."""

    code = "NonExistence"

    def __init__(self, message, x_star):
        super().__init__(message)
        self.x_star = x_star


class NumericalError(SlmError, ArithmeticError):
    code = "NumericalFailure"
    exit_status = 4


class QuadratureError(NumericalError):
    code = "QuadratureFailure"


class IndeterminateError(NumericalError):
    code = "Indeterminate"


class TailUndeterminedError(NumericalError):
    code = "TailUndetermined"


class LevelsTooLowError(NumericalError):
    code = "LevelsTooLow"


class TooFewQuotesError(DomainError):
    code = "TooFewQuotes"


class NonWingDataError(DomainError):
    code = "NonWingData"
