"""Exception types shared across the package."""


class LmfsimError(Exception):
    """Base class for all package-specific errors."""


class InvalidExponent(LmfsimError, ValueError):
    """Tail or shape exponent outside the admissible range."""


class InvalidSupport(LmfsimError, ValueError):
    """Tabulated support is empty, non-integer, non-positive or too wide."""


class NonconvergentMean(LmfsimError, ArithmeticError):
    """Requested a mean (or stationary quantity) of a law with infinite mean."""


class DomainError(LmfsimError, ValueError):
    """Argument outside the domain of a theory formula."""


class DegenerateExponent(DomainError):
    """Exponent too close to a removable singularity for a stable evaluation."""


class StateSpaceTooLarge(LmfsimError):
    """Brute-force chain enumeration would exceed the state budget."""


class SeriesTooShort(LmfsimError, ValueError):
    """Sign series too short for the requested maximum lag."""


class EmptyLog(LmfsimError, ValueError):
    """No completed metaorders available for aggregation."""


class InsufficientPoints(LmfsimError, ValueError):
    """Too few usable points in the fit window."""


class ConfigError(LmfsimError, ValueError):
    """Malformed or inconsistent run configuration."""
