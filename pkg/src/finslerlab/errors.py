"""Exception hierarchy shared by all modules."""


class FinslerError(Exception):
    """Base class for every error raised by finslerlab."""


class ZeroDirectionError(FinslerError, ValueError):
    """A metric quantity was requested along the zero direction y = 0."""


class ParameterError(FinslerError, ValueError):
    """Metric parameters violate the family's strong-convexity bounds."""


class ConvexityError(FinslerError, ArithmeticError):
    """The fundamental tensor is not positive definite at the evaluation point."""


class ConvergenceError(FinslerError, RuntimeError):
    """An iterative solver, quadrature or integrator did not converge."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class CertificationError(FinslerError):
    """A metric failed a precondition check (Landsberg, K <= 0, ...)."""


class GeometryError(FinslerError, ValueError):
    """Ill-posed geometric input: degenerate curve, zero of a field on the boundary, ..."""


class ConfigError(FinslerError, ValueError):
    """Invalid run configuration; ``location`` names the offending key or line."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
