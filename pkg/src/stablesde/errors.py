"""Exception types shared across the library."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class ConfigurationError(ValueError):
    """A configuration is internally inconsistent or under-resolved."""


class ResolutionError(ConfigurationError):
    """A grid is too coarse for the requested operation."""


class UsageError(TypeError):
    """An operation was called on an object that cannot support it."""


class UnsupportedSphereError(ParameterError):
    """The spherical measure admits no exact sampler."""


class BlockVanishesError(ArithmeticError):
    """A dyadic block is identically zero, so a ratio is undefined."""


class ExperimentAborted(RuntimeError):
    """An experiment tripped a hard sanity guard (e.g. exclusion rate)."""
