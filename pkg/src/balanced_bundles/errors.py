"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class BalancedBundlesError(Exception):
    """Base class for all library errors."""


class IntegrationError(BalancedBundlesError):
    """An integrand produced a non-finite value at a quadrature node."""


class FiniteDifferenceError(BalancedBundlesError):
    """A finite-difference stencil sampled a non-finite value."""


class InvalidBasisError(BalancedBundlesError):
    """Coefficient data does not describe a basis of global sections."""


class SingularPointError(BalancedBundlesError):
    """The section matrix drops rank at a point (a base point of the map)."""

    def __init__(self, point, message: str | None = None):
        self.point = point
        super().__init__(message or f"section matrix is rank deficient at {point}")


class SingularGramError(BalancedBundlesError):
    """The Gram matrix is numerically singular."""


class PreconditionError(BalancedBundlesError):
    """An operation was called with inputs violating its documented precondition."""


class DimensionMismatchError(BalancedBundlesError):
    """Two Grassmannian maps do not share the same (N, r)."""


class ParseError(BalancedBundlesError):
    """Malformed structured-text input (map expressions, bases, configs)."""
