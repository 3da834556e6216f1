"""Exception hierarchy shared by all orliczlab modules."""


class OrliczLabError(Exception):
    """Base class for every error raised by orliczlab."""


class DomainError(OrliczLabError, ValueError):
    """An argument lies outside the domain of a function (negative or non-finite t)."""


class ParameterError(OrliczLabError, ValueError):
    """A parameter combination violates a documented range."""


class BracketOverflowError(OrliczLabError, OverflowError):
    """Bracket expansion for a monotone inversion left the representable range."""


class ResolutionError(OrliczLabError, ValueError):
    """A grid is too coarse to resolve the requested geometry."""


class RegionError(OrliczLabError, ValueError):
    """An averaging region does not meet the domain."""


class ConfigurationError(OrliczLabError, ValueError):
    """Inconsistent model configuration (for instance a vanishing kernel)."""


class CurveError(OrliczLabError, ValueError):
    """A core curve leaves the domain."""
