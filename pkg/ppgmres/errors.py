"""
Exception types raised by ppgmres
"""

from typing import Optional


class PPGmresError(Exception):
    """Base class for all ppgmres errors"""


class BreakdownError(PPGmresError):
    """A Krylov or least-squares process hit an exactly singular step"""


class SingularMatrixError(PPGmresError):
    """A small dense system could not be solved"""


class ConvergenceError(PPGmresError):
    """An inner iteration did not converge"""


class DimensionError(PPGmresError):
    """Operand sizes do not agree"""


class DegenerateVectorError(PPGmresError):
    """A vector that must be nonzero came out zero"""


class UnknownSpectrumError(PPGmresError):
    """The operator does not carry a known spectrum"""


class BalanceError(PPGmresError):
    """A balancing method cannot be applied to the given polynomial"""


class ConfigurationError(PPGmresError):
    """The experiment setup names something that does not exist"""


class UnsupportedFormatError(PPGmresError):
    """A Matrix Market header names a format we do not read"""


class MatrixMarketError(PPGmresError):
    """A Matrix Market file failed to parse"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DegreeTooHighError(PPGmresError):
    """The polynomial has an unstable root on the small side of the spectrum"""

    def __init__(self, log10_pof: float, theta: complex):
        self.log10_pof = log10_pof
        self.theta = theta
        super().__init__(
            f"small-side root {theta:.6g} has log10 pof {log10_pof:.2f}; reduce the polynomial degree"
        )
