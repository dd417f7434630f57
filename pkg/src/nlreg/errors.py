"""Exception types shared across the library.

Names follow the error contracts of the individual operations; everything
derives from NlregError so callers can catch library failures in one clause.
"""


class NlregError(Exception):
    pass


class DiagonalPoint(NlregError):
    """Kernel evaluated at (or too close to) x == y."""


class NoZeroLimit(NlregError):
    """Polar extension requested at r = 0 for a kernel without an analytic limit."""


class NonconvergentPV(NlregError):
    """Principal-value annulus sums failed the Cauchy stopping criterion."""


class InsufficientRegularity(NlregError):
    """Local differences of the field grow too fast for the operator order."""


class BadExponent(NlregError):
    """Morrey exponent outside [0, 2s)."""


class DivergentTail(NlregError):
    """Far-field decay too slow for the requested integral."""


class FitIllConditioned(NlregError):
    """Too few scales (or degenerate data) for a log-log exponent fit."""


class ScaleTooLarge(NlregError):
    """Flattening scale violates the 1/4 Jacobian deviation bound."""


class SupportEscape(NlregError):
    """Test function support reaches the grid box edge."""


class NotPositiveDefinite(NlregError):
    """Assembled system is not positive definite (potential too negative)."""

    def __init__(self, rayleigh_quotient: float):
        self.rayleigh_quotient = rayleigh_quotient
        super().__init__(
            f"system not positive definite: Rayleigh quotient {rayleigh_quotient:.6g}"
        )


class MaxIterExceeded(NlregError):
    """Iterative solver hit the iteration cap before reaching tolerance."""


class DegenerateDenominator(NlregError):
    """Projection denominator below threshold (probe ball misses the domain)."""


class StripTooThin(NlregError):
    """Boundary strip narrower than the minimum resolvable width."""


class RadiusEscapesDomain(NlregError):
    """Probe ball leaves the domain for an interior probe."""


class OriginPoint(NlregError):
    """Potential kernel evaluated at the origin."""


class EmptyField(NlregError):
    """Field is identically zero where a normalization is required."""


class NotOnBoundary(NlregError):
    """Point is not within tolerance of the domain boundary."""


class ProblemTooLarge(NlregError):
    """Requested discretization exceeds the configured memory budget."""


class GridMismatch(NlregError):
    """Field grid does not match the experiment configuration."""


class ConfigError(NlregError):
    """Schema violation in an experiment config; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
