from importlib.metadata import PackageNotFoundError, version

from .errors import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    FixedPointError,
    NoiseRangeError,
    PreconditionError,
    RimError,
)

try:
    __version__ = version("stochastic-rim")
except PackageNotFoundError:
    __version__ = "0.0.0"
