"""Exception hierarchy shared by every module."""


class VWWaveError(Exception):
    """Base class for all package errors."""


class ResolutionError(VWWaveError):
    """A grid is too coarse for the requested kernel or derivative."""


class ConstructionError(VWWaveError):
    """A kernel failed its own quadrature certification."""


class DomainError(VWWaveError):
    """Output domain too small to hold a smeared support."""


class ConfigurationError(VWWaveError):
    """Inputs are inconsistent with each other or with a precondition."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class UnsupportedDistributionError(ConfigurationError):
    pass


class GlaeserViolation(VWWaveError):
    pass


class FitError(VWWaveError):
    pass


class CFLError(VWWaveError):
    pass


class DivergenceError(VWWaveError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UnsupportedLevelError(VWWaveError):
    pass


class VerificationError(VWWaveError):
    pass
