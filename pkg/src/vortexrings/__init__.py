"""Vortex-blob simulation of concentrated vortex rings and their point-vortex limit."""

from .errors import (CollapseError, ConfigError, DomainError, DomainExitError,
                     NumericError, QuadratureError, SingularInputError, VortexError)

__version__ = "0.1.0"
