"""Exception hierarchy shared by all modules."""


class TevpError(Exception):
    """Base class for every error raised by the package."""


class DomainError(TevpError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class CapabilityError(TevpError, NotImplementedError):
    """Request is well-posed but not supported by this implementation."""


class SingularityError(TevpError, ZeroDivisionError):
    """Kernel evaluated at its singular point."""


class NumericalRangeError(TevpError, ArithmeticError):
    """Result is not representable (overflow, NaN) in double precision."""


class GeometryError(TevpError, ValueError):
    """Invalid boundary parametrization (self-intersection, bad offset)."""


class ProximityError(TevpError, ValueError):
    """Evaluation point too close to the boundary for plain quadrature."""


class NearSingularError(TevpError, ArithmeticError):
    """Single-layer operator is numerically singular at this wavenumber.

    Parameters
    ----------
    kappa : float
        The offending wavenumber.
    cond : float
        Condition number estimate that triggered the error.
    """

    def __init__(self, kappa, cond, message=None):
        self.kappa = float(kappa)
        self.cond = float(cond)
        if message is None:
            message = f"single-layer operator near singular at kappa={kappa:.12g} (cond={cond:.3e})"
        super().__init__(message)


class CalibrationError(TevpError, ArithmeticError):
    """Symbol calibration failed to reach its asymptotic plateau."""


class FitError(TevpError, ValueError):
    """Least-squares fit could not be performed."""


class UndefinedAverageError(TevpError, ValueError):
    """Average over an empty eigenvalue window."""


class ResolutionError(TevpError, ValueError):
    """Sampling grid too coarse for the requested wavenumber."""


class ConfigError(TevpError, ValueError):
    """Invalid run configuration."""
