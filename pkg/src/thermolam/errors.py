"""Exception types shared across the package."""


class ThermolamError(Exception):
    """Base class for all errors raised by this package."""


class MaterialError(ThermolamError, ValueError):
    """Physically invalid material input."""


class SingularOperatorError(ThermolamError, ArithmeticError):
    """A matrix that must be invertible is singular (e.g. zero conductivity)."""


class DegenerateSpectrumError(ThermolamError, ArithmeticError):
    """Eigenvalues too close (or eigenvectors too ill-conditioned) for an
    eigendecomposition; the caller should use the series route instead."""


class ConvergenceError(ThermolamError, ArithmeticError):
    """An iterative method hit its iteration cap."""


class PalindromicityError(ThermolamError, ArithmeticError):
    """Characteristic polynomial of a transfer matrix is not palindromic to
    tolerance, i.e. symplecticity was lost to rounding upstream."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class SeriesError(ThermolamError, ValueError):
    """Incompatible power-series operands."""


class ConfigError(ThermolamError, ValueError):
    """Invalid run configuration."""
