"""Exception hierarchy shared across the package.

Everything user-facing derives from :class:`HdglhtError` so callers (and the
CLI) can catch validation problems with a single except clause.
"""


class HdglhtError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(HdglhtError, ValueError):
    """Inputs whose shapes/lengths are inconsistent with each other."""


class InvalidContrast(HdglhtError, ValueError):
    """Coefficient matrix violates the q >= 1, k >= 2, q < k shape rules."""


class RankDeficient(InvalidContrast):
    """Coefficient matrix rows are (numerically) linearly dependent."""


class InvalidK(InvalidContrast):
    """Group count too small for the requested contrast."""


class ZeroContrast(InvalidContrast):
    """All contrast coefficients are zero."""


class InvalidP(HdglhtError, ValueError):
    """Dimension p must be a positive integer."""


class InvalidRho(HdglhtError, ValueError):
    """Sparsity exponent must lie in [0, 1]."""


class InvalidAlpha(HdglhtError, ValueError):
    """Significance level must lie strictly between 0 and 1."""


class InvalidDof(HdglhtError, ValueError):
    """Chi-square degrees of freedom must be positive (fractional allowed)."""


class TooFewObservations(HdglhtError, ValueError):
    """A group sample is too small for the requested estimator."""


class DegenerateTest(HdglhtError, ArithmeticError):
    """Trace estimates collapsed to zero; no calibration is possible."""


class SizeGuardExceeded(HdglhtError, ValueError):
    """A dense reference computation was requested above its size limit."""


class NotPSD(HdglhtError, ValueError):
    """A covariance matrix has a materially negative eigenvalue."""


class ParseError(HdglhtError, ValueError):
    """A data/contrast/weights file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line


class ColumnMismatch(HdglhtError, ValueError):
    """Group files do not share a common column count."""


class ConfigError(HdglhtError, ValueError):
    """Simulation config document is invalid.

    ``pointer`` is a JSON pointer to the offending field.
    """

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer
