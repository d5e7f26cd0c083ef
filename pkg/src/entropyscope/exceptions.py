"""Exception types raised across the package.

Validation errors carry the measured violation magnitude in their message so
a failing input can be diagnosed without re-running the check by hand.
"""


class EntropyscopeError(Exception):
    """Base class for all package-specific errors."""


class BadDimension(EntropyscopeError):
    """Matrix is not square or its dimension is not a power of two."""


class NotHermitian(EntropyscopeError):
    """Matrix deviates from its conjugate transpose beyond tolerance."""


class TraceNotOne(EntropyscopeError):
    """Trace differs from 1 beyond tolerance."""


class NotPSD(EntropyscopeError):
    """Matrix has an eigenvalue below the negativity tolerance."""


class DimMismatch(EntropyscopeError):
    """Operands act on spaces of different dimension."""


class InfeasibleFloor(EntropyscopeError):
    """Requested minimum eigenvalue exceeds what a unit-trace spectrum allows."""


class AlphaOutOfRange(EntropyscopeError):
    """Renyi order must lie in (0,1) or (1,inf)."""


class BetaOutOfRange(EntropyscopeError):
    """Binomial-bound exponent must lie in (-1,0) or (0,inf)."""


class BadDt(EntropyscopeError):
    """Single-segment time step too large for the block-encoding (cos(dt) <= 0)."""


class NonpositiveArgument(EntropyscopeError):
    """Power-trace estimate fell at or below zero; logarithm undefined."""


class InfeasibleBudget(EntropyscopeError):
    """Planned copy consumption exceeds the configured ceiling."""
