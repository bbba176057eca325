class DomainError(ValueError):
    """Argument outside the domain of a function or model."""


class NumericalError(ArithmeticError):
    """An iterative method (quadrature, series, optimizer) failed to converge."""


class StatisticalResolutionError(RuntimeError):
    """Too few Monte Carlo samples to resolve the requested quantity."""
