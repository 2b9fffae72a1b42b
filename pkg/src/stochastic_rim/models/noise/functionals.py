"""Path functionals K~, K+- and K2 of a two-sided Brownian path."""

from dataclasses import dataclass, replace

import numpy as np

from stochastic_rim.errors import ConfigurationError, DomainError
from .path import NoisePath
from .seeding import STREAM_BRIDGE, STREAM_BRIDGE_NEG, substream


@dataclass(frozen=True)
class KFunctionals:
    # sup_{s<=0} (w(s) + s)
    k_tilde: float
    # sup_{s<=0} (-w(s) + s)
    k_tilde_neg: float
    # (K~(w) + 1) + (K~(-w) + 1)
    k_pm: float
    # sup_{s<=0} |1 - exp(nu s + sigma w(s))| / (sigma exp(eta |s|))
    k2: float

    def attach(self, path: NoisePath) -> NoisePath:
        return replace(path, k_tilde=self.k_tilde, k_pm=self.k_pm)


def _bridge_sup(y: np.ndarray, dt: float, rng: np.random.Generator) -> float:
    """Exact sample of the continuous maximum given the grid values y."""
    if len(y) < 2:
        return float(y[0])
    a, b = y[:-1], y[1:]
    u = rng.random(len(a))
    m = 0.5 * (a + b + np.sqrt((b - a) ** 2 - 2.0 * dt * np.log1p(-u)))
    return float(max(np.max(m), np.max(y)))


def compute_k_functionals(
    path: NoisePath,
    nu: float,
    sigma: float,
    eta: float,
    bridge: bool = False,
) -> KFunctionals:
    """
    Grid suprema over the stored history s in [t_start, 0].

    With ``bridge=True`` the suprema defining K~ are refined by sampling
    the continuous maximum of each grid interval from the Brownian bridge
    law, which removes the O(sqrt(dt)) downward bias of grid maxima.
    """
    if sigma <= 0:
        raise DomainError("K2 is undefined for sigma = 0")
    zi = path.zero_index
    s = path.times[: zi + 1]
    w = path.w[: zi + 1]

    if bridge:
        if path.seed is None:
            raise ConfigurationError("bridge refinement needs a seeded path")
        k_tilde = _bridge_sup(w + s, path.dt, substream(path.seed, STREAM_BRIDGE))
        k_tilde_neg = _bridge_sup(-w + s, path.dt, substream(path.seed, STREAM_BRIDGE_NEG))
    else:
        k_tilde = float(np.max(w + s))
        k_tilde_neg = float(np.max(-w + s))

    ratio = np.abs(-np.expm1(nu * s + sigma * w)) / (sigma * np.exp(eta * np.abs(s)))
    return KFunctionals(
        k_tilde=k_tilde,
        k_tilde_neg=k_tilde_neg,
        k_pm=(k_tilde + 1.0) + (k_tilde_neg + 1.0),
        k2=float(np.max(ratio)),
    )
