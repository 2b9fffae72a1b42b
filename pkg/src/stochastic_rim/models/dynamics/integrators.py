"""
Pathwise integration of the random PDE

    v_t = -L v + (nu + z) v + e^{-z} B^R(e^z v)      (cut-off)
    v_t = -L v + (nu + z) v + e^{z} B(v, v)          (no cut-off)

obtained from the SPDE by v = e^{-z} u. The linear part is diagonal and
integrated exactly over each step; the nonlinearity is treated by
exponential Euler, optionally corrected by the trapezoidal rule on the
Duhamel integral (second order).
"""

import logging
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from stochastic_rim.errors import BlowUpError, ConfigurationError, NoiseRangeError
from stochastic_rim.models.noise import NoisePath, TimeGrid
from stochastic_rim.models.spectral import SpectralModel, apply_b, cutoff_profile, norms
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

BLOWUP_GUARD = 1e6


class ForwardNoise:
    """z at the integration nodes and int z over each step, from t = 0."""

    def __init__(self, path: NoisePath, t_end: float, dt: float):
        if path.z is None:
            raise ConfigurationError("noise path has no OU component")
        ratio = dt / path.dt
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(f"dt={dt} must be a multiple of the noise step {path.dt}")
        n_steps = int(round(t_end / dt))
        if n_steps < 1:
            raise ConfigurationError(f"t_end={t_end} shorter than one step dt={dt}")
        zi = path.zero_index
        last = zi + n_steps * stride
        if last > path.grid.n_steps:
            raise NoiseRangeError(f"noise path ends at {path.grid.t_end}, need {n_steps * dt}")

        fine_t = path.times[zi: last + 1]
        cum = cumulative_trapezoid(path.z[zi: last + 1], fine_t, initial=0.0)
        nodes = np.arange(0, n_steps * stride + 1, stride)
        self.grid = TimeGrid(0.0, n_steps * dt, dt, n_steps)
        self.dt = dt
        self.n_steps = n_steps
        self.z = path.z[zi + nodes]
        # int_0^{t_n} z
        self.big_z = cum[nodes]
        self.step_integral = np.diff(self.big_z)


def _nonlinearity(model: SpectralModel, v: np.ndarray, z: float, cutoff: bool) -> np.ndarray:
    ez = np.exp(z)
    b = apply_b(model, v)
    if cutoff:
        return cutoff_profile(float(norms(model, ez * v)), model.r_cut) * ez * b
    return ez * b


def integrate_v(
    model: SpectralModel,
    path: NoisePath,
    v0: np.ndarray,
    t_end: float,
    dt: float,
    cutoff: bool = True,
    nu: float = 0.0,
    corrector: bool = True,
    blowup_guard: float = BLOWUP_GUARD,
) -> Trajectory:
    v0 = np.asarray(v0, dtype=np.float64)
    if v0.shape != (model.n_total,) or not np.all(np.isfinite(v0)):
        raise ConfigurationError("v0 must be a finite state vector")
    noise = ForwardNoise(path, t_end, dt)
    rate = (-model.lam + nu) * dt

    states = np.empty((noise.n_steps + 1, model.n_total))
    states[0] = v0
    v = v0
    for n in range(noise.n_steps):
        decay = np.exp(rate + noise.step_integral[n])
        nl = _nonlinearity(model, v, noise.z[n], cutoff)
        v_pred = decay * (v + dt * nl)
        if corrector:
            nl_pred = _nonlinearity(model, v_pred, noise.z[n + 1], cutoff)
            v = decay * v + 0.5 * dt * (decay * nl + nl_pred)
        else:
            v = v_pred
        size = float(norms(model, v))
        if not np.isfinite(size) or size > blowup_guard:
            raise BlowUpError(float(noise.grid.times[n + 1]), size, blowup_guard)
        states[n + 1] = v
    return Trajectory(noise.grid, states, "v")


def linear_benchmark_solution(u0: np.ndarray, lam: np.ndarray, path: NoisePath, t: float) -> np.ndarray:
    """Stratonovich solution u0 e^{-lam t + sigma w(t)} of du = -lam u dt + sigma u o dW."""
    if path.sigma is None:
        raise ConfigurationError("path has no sigma")
    w_t = path.w[path.grid.index_of(t)]
    return np.asarray(u0) * np.exp(-np.asarray(lam) * t + path.sigma * w_t)
