from dataclasses import dataclass
from functools import cached_property

import numpy as np

from stochastic_rim.errors import ConfigurationError

# Relative slack when deciding whether a time lies on the grid
_NODE_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform time grid. Node times are computed as integer multiples of dt,
    so t = 0 is an exact node whenever t_start <= 0 <= t_end.
    """
    t_start: float
    t_end: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be >= 1, got {self.n_steps}")
        expected = self.t_start + self.n_steps * self.dt
        if abs(expected - self.t_end) > _NODE_TOL * max(1.0, abs(self.t_end), abs(self.t_start)):
            raise ConfigurationError(
                f"t_end={self.t_end} != t_start + n_steps*dt = {expected}"
            )
        if self.t_start <= 0.0 <= self.t_end:
            k0 = self.t_start / self.dt
            if abs(k0 - round(k0)) > _NODE_TOL * max(1.0, abs(k0)):
                raise ConfigurationError(
                    f"t=0 is not a grid node (t_start={self.t_start} is not a multiple of dt={self.dt})"
                )

    @classmethod
    def two_sided(cls, tail: float, horizon: float, dt: float) -> "TimeGrid":
        """Grid covering [-tail, horizon] with t = 0 as a node."""
        if dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        if tail < 0 or horizon < 0:
            raise ConfigurationError(f"tail and horizon must be >= 0, got {tail}, {horizon}")
        n_back = int(round(tail / dt))
        n_fwd = int(round(horizon / dt))
        return cls(-n_back * dt, n_fwd * dt, dt, n_back + n_fwd)

    @property
    def offset(self) -> int:
        """Integer index of the first node, t_start = offset * dt."""
        return int(round(self.t_start / self.dt))

    @cached_property
    def times(self) -> np.ndarray:
        return (np.arange(self.n_steps + 1) + self.offset) * self.dt

    @property
    def zero_index(self) -> int:
        if not (self.t_start <= 0.0 <= self.t_end):
            raise ConfigurationError("grid does not contain t=0")
        return -self.offset

    def index_of(self, t: float) -> int:
        """Index of node t; raises ConfigurationError when t is not a node."""
        k = t / self.dt - self.offset
        idx = int(round(k))
        if abs(k - idx) > 1e-6 or idx < 0 or idx > self.n_steps:
            raise ConfigurationError(f"t={t} is not a node of {self}")
        return idx

    def contains(self, t: float) -> bool:
        slack = _NODE_TOL * max(1.0, abs(t))
        return self.t_start - slack <= t <= self.t_end + slack
