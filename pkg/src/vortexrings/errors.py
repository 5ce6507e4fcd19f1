"""Exception hierarchy shared by every module."""


class VortexError(Exception):
    """Base class for all package errors."""


class ConfigError(VortexError, ValueError):
    pass


class SingularInputError(VortexError, ValueError):
    pass


class DomainError(VortexError, ValueError):
    pass


class NumericError(VortexError, ArithmeticError):
    pass


class ResolutionError(ConfigError):
    pass


class QuadratureError(NumericError):
    """Adaptive quadrature ran out of panels before meeting its tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class CollapseError(VortexError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class DomainExitError(DomainError):
    """A particle left the half plane r > 0."""

    def __init__(self, message, particle=None):
        super().__init__(message)
        self.particle = particle


class KernelEvaluationError(VortexError):
    """Kernel failure while summing over particles; carries the source index."""

    def __init__(self, message, particle=None):
        super().__init__(message)
        self.particle = particle
