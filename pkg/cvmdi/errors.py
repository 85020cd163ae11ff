"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/errors.py
#########################################
"""

from __future__ import annotations


class CvmdiError(Exception):
    """Base class for every error raised by the key-rate library."""


class ConfigError(CvmdiError):
    """Invalid run configuration (unknown key, bad value, conflicting keys)."""


class DomainError(CvmdiError, ValueError):
    """An argument lies outside its documented range."""


class ContractViolation(CvmdiError, ValueError):
    """Structural misuse: bad shapes, unknown or duplicate mode labels, asymmetric input."""


class UnphysicalStateError(CvmdiError):
    """A covariance matrix violates the uncertainty relation."""

    def __init__(self, message: str, *, min_symplectic_eigenvalue: float) -> None:
        super().__init__(f"{message} (min symplectic eigenvalue {min_symplectic_eigenvalue:.12g})")
        self.min_symplectic_eigenvalue = min_symplectic_eigenvalue


class NumericalFailure(CvmdiError):
    """Eigen-solver failure or an inconsistent numerical result."""


class SingularMeasurementError(NumericalFailure):
    """A measured quadrature (or relay matrix) has no invertible variance."""


class EstimationFailure(CvmdiError):
    """Parameter estimation produced no usable result."""
