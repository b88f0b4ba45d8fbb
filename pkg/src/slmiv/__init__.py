"""Option pricing, smiles and bubble diagnostics when the underlying may be a strict local martingale."""

from .errors import (
    DomainError,
    IndeterminateError,
    LevelsTooLowError,
    NonExistenceError,
    NonWingDataError,
    NumericalError,
    OutOfBoundsError,
    QuadratureError,
    SlmError,
    TailUndeterminedError,
    TooFewQuotesError,
)
from .models import (
    MartingaleClass,
    QuadraticVolSpec,
    absorbed_bm_terminal_law,
    bridge_terminal_law,
    cev_terminal_law,
    classify_quadratic,
    lognormal_terminal_law,
    martingale_defect,
    parse_model,
)
from .pricer import call_price, existence_boundary, put_price, put_smile, smile

__version__ = "0.1.0"
