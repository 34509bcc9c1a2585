"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid parameters (grid size, parameter chain, paths)."""


class GridTooLargeError(ConfigurationError):
    """A dense oracle was asked to work on a grid it refuses to handle."""


class ConvergenceError(RuntimeError):
    """An iterative eigensolver did not reach the requested residual."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class ResolutionError(RuntimeError):
    """Every computed eigenvalue fell inside the kernel band; refine the grid."""


class AdmissibilityError(ValueError):
    """Trial field outside the admissible cone of a Rayleigh quotient."""


class ConsistencyError(AssertionError):
    """An internal identity (e.g. Clifford imaginarity) failed numerically."""


class DegenerateFieldError(ValueError):
    """A Rayleigh quotient denominator vanished."""
