"""Exception hierarchy shared by the library and the command-line front end."""

from typing import Optional


class RimError(Exception):
    """Base class for every error raised by stochastic_rim."""


class ConfigurationError(RimError, ValueError):
    """Invalid grid, parameter ordering, hypothesis violation or malformed config."""


class DomainError(RimError, ValueError):
    """Input outside the domain of a functional (e.g. sigma = 0 for K2)."""


class NoiseRangeError(RimError, IndexError):
    """A requested time window is not covered by the stored noise path."""


class PreconditionError(RimError, ValueError):
    """The contraction condition does not hold for the requested parameters."""


class FixedPointError(RimError, RuntimeError):
    """Picard iteration did not reach the tolerance within max_iter."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class BlowUpError(RimError, RuntimeError):
    """State norm exceeded the blow-up guard during time stepping."""

    def __init__(self, time: float, norm: float, limit: Optional[float] = None):
        detail = f" > {limit:.1e}" if limit is not None else ""
        super().__init__(f"blow-up at t={time:.6g}: |v|={norm:.3e}{detail}")
        self.time = time
        self.norm = norm
