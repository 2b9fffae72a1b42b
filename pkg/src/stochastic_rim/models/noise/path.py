"""
Two-sided Brownian paths and the stationary Ornstein-Uhlenbeck process

    dz + z dt = sigma dw

sampled exactly on a uniform grid. The pair (dw, I) of a Brownian increment
and the OU innovation I = int exp(-(t+h-s)) dw(s) over one step is jointly
Gaussian with

    Var(dw) = h,  Var(I) = (1 - exp(-2h)) / 2,  Cov(dw, I) = 1 - exp(-h),

so the stored w and z are pathwise consistent.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Literal, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.signal import lfilter

from stochastic_rim.errors import ConfigurationError, NoiseRangeError
from .config import NoiseConfig
from .grid import TimeGrid
from .seeding import (
    STREAM_BACKWARD,
    STREAM_FORWARD,
    STREAM_OU,
    SeedLike,
    as_seed_sequence,
    substream,
)

logger = logging.getLogger(__name__)

OUMode = Literal["stationary", "zero_tail"]

# Tail contribution to z(0) above which the history is reported as too short
Z0_TAIL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class NoisePath:
    """One realization of the driving noise on a grid containing t = 0."""

    grid: TimeGrid

    # Brownian path, w[zero_index] == 0
    w: np.ndarray

    # OU process driven by w (None until derive_ou)
    z: Optional[np.ndarray] = None

    sigma: Optional[float] = None

    # Literal functional sigma * int_{-inf}^0 e^s w(s) ds, see z_at_zero
    z0: Optional[float] = None

    # Bound on the part of z0 lost by cutting the history at -tail_T
    z0_tail_term: float = 0.0

    # Length of the stored history before t = 0
    tail_T: float = 0.0

    k_tilde: Optional[float] = None
    k_pm: Optional[float] = None

    # Seed of the path, kept so derived streams stay reproducible
    seed: Optional[np.random.SeedSequence] = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def dt(self) -> float:
        return self.grid.dt

    @property
    def zero_index(self) -> int:
        return self.grid.zero_index

    @property
    def tail_truncated(self) -> bool:
        return self.z0_tail_term > Z0_TAIL_TOL

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "NoisePath":
        """Deterministic path w = fn(t), shifted so that w(0) = 0."""
        w = np.asarray(fn(grid.times), dtype=np.float64)
        w = w - w[grid.zero_index]
        return cls(grid=grid, w=w, tail_T=-grid.t_start)


def sample_brownian(grid: TimeGrid, seed: SeedLike) -> NoisePath:
    """
    Sample a two-sided Brownian path on ``grid`` with w(0) = 0.

    Increments on t >= 0 and on t <= 0 come from separate sub-streams, so two
    grids with the same dt and seed share their common part of the path.
    """
    if not (grid.t_start <= 0.0 <= grid.t_end):
        raise ConfigurationError("Brownian paths are anchored at t=0; grid must contain 0")
    seq = as_seed_sequence(seed)
    zi = grid.zero_index
    n_fwd = grid.n_steps - zi
    scale = np.sqrt(grid.dt)

    w = np.zeros(grid.n_steps + 1)
    if n_fwd > 0:
        w[zi + 1:] = np.cumsum(substream(seq, STREAM_FORWARD).standard_normal(n_fwd) * scale)
    if zi > 0:
        back = np.cumsum(substream(seq, STREAM_BACKWARD).standard_normal(zi) * scale)
        w[:zi] = back[::-1]
    return NoisePath(grid=grid, w=w, tail_T=-grid.t_start, seed=seq)


def derive_ou(
    path: NoisePath,
    sigma: float,
    mode: OUMode = "zero_tail",
    seed: Optional[SeedLike] = None,
) -> NoisePath:
    """
    Attach the OU process z driven by ``path.w``.

    mode="stationary" draws z(t_start) ~ N(0, sigma^2/2); mode="zero_tail"
    starts from z(t_start) = 0 and relies on a long history tail.
    """
    if sigma < 0 or not np.isfinite(sigma):
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if mode not in ("stationary", "zero_tail"):
        raise ConfigurationError(f"unknown OU mode {mode!r}")

    h = path.dt
    n = path.grid.n_steps
    decay = np.exp(-h)

    if sigma == 0.0:
        z = np.zeros(n + 1)
    else:
        seq = seed if seed is not None else path.seed
        if seq is None:
            raise ConfigurationError("derive_ou needs a seed for paths without one")
        rng = substream(seq, STREAM_OU)
        dw = np.diff(path.w)
        var_i = -np.expm1(-2.0 * h) / 2.0
        cov = -np.expm1(-h)
        cond_var = max(var_i - cov * cov / h, 0.0)
        innov = cov / h * dw + np.sqrt(cond_var) * rng.standard_normal(n)
        z_start = rng.standard_normal() * sigma / np.sqrt(2.0) if mode == "stationary" else 0.0
        drive = np.concatenate(([z_start], sigma * innov))
        z = lfilter([1.0], [1.0, -decay], drive)

    out = replace(path, z=z, sigma=float(sigma))
    return replace(out, z0=z_at_zero(out), z0_tail_term=z0_tail_term(out))


def z_at_zero(path: NoisePath, sigma: Optional[float] = None) -> float:
    """
    Trapezoidal quadrature of sigma * int_{t_start}^0 e^s w(s) ds.

    This is the literal path functional; the OU value carried by the
    dynamics is ``z_origin(path)``, which equals minus this functional up to
    quadrature error. The pathwise bound z0 <= sigma*(K~ + 1) holds for it.
    """
    sig = path.sigma if sigma is None else sigma
    if sig is None:
        raise ConfigurationError("z_at_zero needs sigma")
    zi = path.zero_index
    t = path.times[: zi + 1]
    w = path.w[: zi + 1]
    z0 = float(sig * trapezoid(np.exp(t) * w, t)) if zi > 0 else 0.0

    k_tilde = float(np.max(w + t))
    tail_bound = z0_tail_term(path, sig)
    if tail_bound > Z0_TAIL_TOL:
        logger.warning(f"History tail {path.tail_T:.2f} too short for z(0): tail term up to {tail_bound:.2e}")
    if z0 > sig * (k_tilde + 1.0) + 1e-12:
        logger.warning(f"z(0)={z0:.6g} exceeds sigma*(K~+1)={sig * (k_tilde + 1.0):.6g}")
    return z0


def z0_tail_term(path: NoisePath, sigma: Optional[float] = None) -> float:
    """Bound sigma e^{-T} (K~ + T + 1) on the z(0) history cut at -T."""
    sig = path.sigma if sigma is None else sigma
    if sig is None:
        raise ConfigurationError("z0_tail_term needs sigma")
    zi = path.zero_index
    if sig == 0.0:
        return 0.0
    k_tilde = float(np.max(path.w[: zi + 1] + path.times[: zi + 1]))
    tail = path.tail_T
    return float(sig * np.exp(-tail) * (k_tilde + tail + 1.0))


def z_origin(path: NoisePath) -> float:
    """OU value z(theta_0 w) from the recursion."""
    if path.z is None:
        raise ConfigurationError("path has no OU component; call derive_ou first")
    return float(path.z[path.zero_index])


def ou_residual(path: NoisePath) -> float:
    """max_t |z(t) - z(0) + int_0^t z - sigma w(t)| over the forward grid."""
    if path.z is None or path.sigma is None:
        raise ConfigurationError("path has no OU component; call derive_ou first")
    zi = path.zero_index
    t = path.times[zi:]
    z = path.z[zi:]
    if len(t) < 2:
        return 0.0
    integral = cumulative_trapezoid(z, t, initial=0.0)
    r = z - z[0] + integral - path.sigma * path.w[zi:]
    return float(np.max(np.abs(r)))


def shift_path(
    path: NoisePath,
    t_shift: float,
    tail: Optional[float] = None,
    horizon: Optional[float] = None,
) -> NoisePath:
    """
    Wiener shift theta_t: w'(s) = w(s + t) - w(t), z'(s) = z(s + t).

    ``tail`` and ``horizon`` optionally cut the result to [-tail, horizon];
    asking for more history or future than stored raises NoiseRangeError.
    """
    grid = path.grid
    if not grid.contains(t_shift):
        raise NoiseRangeError(f"shift {t_shift} outside stored window [{grid.t_start}, {grid.t_end}]")
    k = grid.index_of(t_shift)

    n_back_avail = k
    n_fwd_avail = grid.n_steps - k
    n_back = n_back_avail if tail is None else int(round(tail / grid.dt))
    n_fwd = n_fwd_avail if horizon is None else int(round(horizon / grid.dt))
    if n_back > n_back_avail:
        raise NoiseRangeError(
            f"history underflow: need tail {n_back * grid.dt:.4g}, have {n_back_avail * grid.dt:.4g}"
        )
    if n_fwd > n_fwd_avail:
        raise NoiseRangeError(
            f"window underflow: need horizon {n_fwd * grid.dt:.4g}, have {n_fwd_avail * grid.dt:.4g}"
        )
    if n_back + n_fwd < 1:
        raise NoiseRangeError("shifted window is empty")

    lo, hi = k - n_back, k + n_fwd
    new_grid = TimeGrid(-n_back * grid.dt, n_fwd * grid.dt, grid.dt, n_back + n_fwd)
    w = path.w[lo: hi + 1] - path.w[k]
    z = None if path.z is None else path.z[lo: hi + 1].copy()
    shifted = NoisePath(grid=new_grid, w=w, z=z, sigma=path.sigma, tail_T=n_back * grid.dt)
    if path.sigma is not None and n_back > 0:
        shifted = replace(shifted, z0=_quiet_z0(shifted))
    return shifted


def _quiet_z0(path: NoisePath) -> float:
    zi = path.zero_index
    t = path.times[: zi + 1]
    return float(path.sigma * trapezoid(np.exp(t) * path.w[: zi + 1], t))


def rescale_path(path: NoisePath, eps: float) -> NoisePath:
    """Slow-time path T = eps^2 t, W(T) = eps * w(T / eps^2)."""
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    g = path.grid
    s = eps * eps
    grid = TimeGrid(g.offset * g.dt * s, (g.offset + g.n_steps) * g.dt * s, g.dt * s, g.n_steps)
    return NoisePath(grid=grid, w=eps * path.w, tail_T=path.tail_T * s)


def sample_noise(sigma: float, seed: SeedLike, config: Optional[NoiseConfig] = None) -> NoisePath:
    """Brownian path on [-config.tail, config.horizon] with its OU process attached."""
    cfg = config or NoiseConfig()
    grid = TimeGrid.two_sided(cfg.tail, cfg.horizon, cfg.dt)
    return derive_ou(sample_brownian(grid, seed), sigma, mode=cfg.ou_mode)
