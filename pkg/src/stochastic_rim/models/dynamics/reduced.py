"""
Flow on the manifold in v-coordinates.

On the graph of h(theta_t w, .), v = v_c + h(theta_t w, v_c) and

    d v_c/dt = (nu + z) v_c + e^{z} chi P_c B(v_c + h, v_c + h).

"quadratic" replaces h by its leading term e^{z} L_s^{-1} B_s(v_c, v_c);
"exact-LP" solves the fixed point for the shifted path every refresh
interval and interpolates the shape h / |v_c|^2 linearly in time.
"""

import logging
from typing import Callable, Literal, Optional

import numpy as np

from stochastic_rim.errors import ConfigurationError
from stochastic_rim.models.manifold import PerronConfig, PerronOperator, solve_fixed_point
from stochastic_rim.models.noise import NoisePath, shift_path, z_origin
from stochastic_rim.models.spectral import SpectralModel, apply_b, cutoff_profile, ls_inverse_bs, norms
from .integrators import ForwardNoise
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

ReducedMode = Literal["exact-LP", "quadratic"]

H_REFRESH = 0.25


def reduced_vector_field(
    model: SpectralModel,
    v_c: np.ndarray,
    h: np.ndarray,
    z: float = 0.0,
    nu: float = 0.0,
) -> np.ndarray:
    """Drift of the center coordinates at the full state v_c + h."""
    v = np.asarray(v_c, dtype=np.float64) + np.asarray(h, dtype=np.float64)
    ez = np.exp(z)
    chi = cutoff_profile(float(norms(model, ez * v)), model.r_cut)
    drift = (nu + z) * v_c + chi * ez * apply_b(model, v)
    return model.project_c(drift)


def quadratic_h(model: SpectralModel, v_c: np.ndarray, z: float) -> np.ndarray:
    return np.exp(z) * ls_inverse_bs(model, v_c)


def _heun(
    model: SpectralModel,
    noise: ForwardNoise,
    start: int,
    stop: int,
    v_c: np.ndarray,
    nu: float,
    h_of: Callable[[int, np.ndarray], np.ndarray],
    out: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exponential Heun over steps [start, stop) for the center equation."""
    dt = noise.dt
    for n in range(start, stop):
        decay = np.exp(nu * dt + noise.step_integral[n])
        f = _nonlinear_c(model, v_c, h_of(n, v_c), noise.z[n])
        pred = decay * (v_c + dt * f)
        f_pred = _nonlinear_c(model, pred, h_of(n + 1, pred), noise.z[n + 1])
        v_c = decay * v_c + 0.5 * dt * (decay * f + f_pred)
        if out is not None:
            out[n + 1] = v_c + h_of(n + 1, v_c)
    return v_c


def _nonlinear_c(model: SpectralModel, v_c: np.ndarray, h: np.ndarray, z: float) -> np.ndarray:
    v = v_c + h
    ez = np.exp(z)
    chi = cutoff_profile(float(norms(model, ez * v)), model.r_cut)
    return model.project_c(chi * ez * apply_b(model, v))


def integrate_reduced(
    model: SpectralModel,
    path: NoisePath,
    a0,
    t_end: float,
    dt: float,
    mode: ReducedMode = "quadratic",
    config: Optional[PerronConfig] = None,
    h_refresh: float = H_REFRESH,
) -> Trajectory:
    """
    Reduced flow started at u_c(0) = a0 on the center space. Returns the
    v-trajectory of the full graph state v_c + h; map with to_u for u.
    """
    config = config or PerronConfig()
    nu = config.nu
    noise = ForwardNoise(path, t_end, dt)
    a0 = np.atleast_1d(np.asarray(a0, dtype=np.float64))
    if a0.shape != (model.n_c,):
        raise ConfigurationError(f"a0 must have {model.n_c} components")
    v_c = model.project_c(np.zeros(model.n_total))
    v_c[: model.n_c] = a0 * np.exp(-z_origin(path))

    states = np.zeros((noise.n_steps + 1, model.n_total))

    if mode == "quadratic":
        def h_quad(n, vc):
            return quadratic_h(model, vc, noise.z[n])

        states[0] = v_c + h_quad(0, v_c)
        _heun(model, noise, 0, noise.n_steps, v_c, nu, h_quad, states)
        return Trajectory(noise.grid, states, "v")

    if mode != "exact-LP":
        raise ConfigurationError(f"unknown reduced mode {mode!r}")

    refresh_steps = max(1, int(round(h_refresh / dt)))

    def shape_at(n: int, vc: np.ndarray) -> np.ndarray:
        size2 = float(np.dot(vc[: model.n_c], vc[: model.n_c]))
        if size2 == 0.0:
            return quadratic_h(model, model.basis_vector(1), noise.z[n])
        op = PerronOperator(model, shift_path(path, noise.grid.times[n]), config)
        sample = solve_fixed_point(model, op.path, vc, operator=op, with_g_chain=False)
        return sample.h / size2

    def held(shape):
        def h_of(n, vc):
            return shape * float(np.dot(vc[: model.n_c], vc[: model.n_c]))
        return h_of

    shape = shape_at(0, v_c)
    states[0] = v_c + held(shape)(0, v_c)
    start = 0
    while start < noise.n_steps:
        stop = min(start + refresh_steps, noise.n_steps)
        predicted = _heun(model, noise, start, stop, v_c.copy(), nu, held(shape))
        shape_end = shape_at(stop, predicted)
        span = stop - start

        def interpolated(n, vc, s0=shape, s1=shape_end, n0=start, m=span):
            theta = (n - n0) / m
            return ((1.0 - theta) * s0 + theta * s1) * float(np.dot(vc[: model.n_c], vc[: model.n_c]))

        v_c = _heun(model, noise, start, stop, v_c, nu, interpolated, states)
        shape = shape_end
        start = stop
        logger.debug(f"exact-LP reduced flow reached t={noise.grid.times[stop]:.3f}")
    return Trajectory(noise.grid, states, "v")
