class NatfertError(Exception):
    """Base class for all package errors."""


class DegeneratePriorError(NatfertError):
    """Marriage-age proposals kept landing outside the reproductive window."""


class EmptyCohortError(NatfertError):
    pass


class GridMismatchError(NatfertError):
    pass


class ZeroAcceptanceError(NatfertError):
    pass


class TooFewSamplesError(NatfertError):
    pass


class DimensionMismatchError(NatfertError):
    pass


class ZeroVarianceError(NatfertError):
    pass


class ConfigError(NatfertError):
    pass


class DataError(NatfertError):
    """Observed-data file could not be parsed or failed validation."""
