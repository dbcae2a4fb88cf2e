"""Exceptions raised by the Clark toolkit. All derive from ``ClarkError``."""


class ClarkError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ClarkError):
    """Raised when a run configuration cannot be parsed or validated."""


class ZeroPolynomialError(ClarkError):
    """Raised when an operation needs a nonzero polynomial."""


class StabilityError(ClarkError):
    """Raised when a denominator polynomial has a sampled zero in the bidisk."""


class InnerUnimodularityError(ClarkError):
    """Raised when sampled values of a rational function violate inner-ness.

    Either an interior sample exceeds modulus one or a torus sample away
    from the singular set is not unimodular.
    """


class DomainError(ClarkError):
    """Raised when a point lies outside the domain an operation accepts."""


class SingularPointError(ClarkError):
    """Raised when boundary data is requested at (or next to) a singular point."""


class ExceptionalAlphaError(ClarkError):
    """Raised when the level set of ``alpha`` contains a horizontal or vertical line.

    Clark measures, the functions psi and the Clark unitaries are only built
    for generic values.
    """


class NonUnimodularRootError(ClarkError):
    """Raised when a level-set slice root strays from the unit circle."""


class VanishingDerivativeError(ClarkError):
    """Raised when a partial derivative vanishes so the Clark weight blows up."""


class PointSelectionError(ClarkError):
    """Raised when kernel sample points give an ill-conditioned Gram matrix."""


class Phi0Error(ClarkError):
    """Raised when the rank-one Clark formula is used with ``phi(0) != 0``."""


class CollocationError(ClarkError):
    """Raised when the collocation system of the adjoint embedding is ill-conditioned."""


class HypothesisError(ClarkError):
    """Raised when the hypotheses of a necessity check are not met."""


class BasisMismatchError(ClarkError):
    """Raised when two operators act on different bases."""


class CommutationError(ClarkError):
    """Raised when a matrix pair does not commute within tolerance."""


class RefinementError(ClarkError):
    """Raised when joint triangularization cannot isolate a joint eigenvector."""


class UnitarityError(ClarkError):
    """Raised when a matrix required to be unitary is not."""


class BranchCrossingWarning(UserWarning):
    """Two level-set roots collide at a node; branch labels may swap there."""


__all__ = [
    "ClarkError",
    "ConfigError",
    "ZeroPolynomialError",
    "StabilityError",
    "InnerUnimodularityError",
    "DomainError",
    "SingularPointError",
    "ExceptionalAlphaError",
    "NonUnimodularRootError",
    "VanishingDerivativeError",
    "PointSelectionError",
    "Phi0Error",
    "CollocationError",
    "HypothesisError",
    "BasisMismatchError",
    "CommutationError",
    "RefinementError",
    "UnitarityError",
    "BranchCrossingWarning",
]
