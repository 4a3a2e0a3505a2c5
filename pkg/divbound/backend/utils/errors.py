"""Exception hierarchy shared by every divbound module.

All errors derive from ``DivboundError`` (itself a ``ValueError``) so callers
and the CLI can catch input problems with a single except clause.
"""


class DivboundError(ValueError):
    """Base class for all divbound input and precondition errors."""


# ------------------------------------------------------------------------------
# Convex toolkit
# ------------------------------------------------------------------------------
class NonConvexInput(DivboundError):
    pass


class EmptyDomain(DivboundError):
    pass


class UnboundedBelow(DivboundError):
    pass


class AllInfinite(DivboundError):
    pass


# ------------------------------------------------------------------------------
# Divergence catalog
# ------------------------------------------------------------------------------
class UnknownName(DivboundError):
    pass


class BadParameter(DivboundError):
    pass


class NotZeroAtOne(DivboundError):
    pass


class InfeasibleConstraint(DivboundError):
    pass


# ------------------------------------------------------------------------------
# Measures
# ------------------------------------------------------------------------------
class InvalidMeasure(DivboundError):
    pass


class MismatchedUniverse(DivboundError):
    pass


class NegativeNu(DivboundError):
    pass


class MissingValue(DivboundError):
    pass


class BadOrder(DivboundError):
    pass


class BadFamily(DivboundError):
    pass


# ------------------------------------------------------------------------------
# Bounds and total-variation specialisation
# ------------------------------------------------------------------------------
class InsufficientSamples(DivboundError):
    pass


class SupportTooLarge(DivboundError):
    pass


class ZeroVariance(DivboundError):
    pass


class NotTwiceDifferentiable(DivboundError):
    pass


class DegenerateInterval(DivboundError):
    pass


# ------------------------------------------------------------------------------
# Input handling
# ------------------------------------------------------------------------------
class InputFormatError(DivboundError):
    """Raised for malformed CSV, JSON, grid or inline distribution input."""


class PreconditionError(DivboundError):
    """Raised when a well-formed input violates an operation's precondition."""
