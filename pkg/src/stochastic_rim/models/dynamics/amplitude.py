import numpy as np

from stochastic_rim.errors import ConfigurationError, NoiseRangeError
from stochastic_rim.models.noise import NoisePath, TimeGrid
from .trajectory import Trajectory

# Coefficient of the cubic term of the Burgers amplitude equation
CUBIC_COEFF = 1.0 / 12.0


def amplitude_drift(nu0: float, a):
    return nu0 * a - CUBIC_COEFF * a ** 3


def integrate_amplitude(nu0: float, a0: float, t_end: float, dt: float, path: NoisePath) -> Trajectory:
    """
    Stratonovich Heun scheme for da = (nu0 a - a^3/12) dT + a o dW on [0, t_end],
    with W taken from ``path`` on the amplitude time scale.
    """
    ratio = dt / path.dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError(f"dt={dt} must be a multiple of the path step {path.dt}")
    n_steps = int(round(t_end / dt))
    zi = path.zero_index
    if zi + n_steps * stride > path.grid.n_steps:
        raise NoiseRangeError(f"path ends at T={path.grid.t_end}, need {t_end}")

    dw = np.diff(path.w[zi: zi + n_steps * stride + 1: stride])
    a = np.empty(n_steps + 1)
    a[0] = a0
    for n in range(n_steps):
        x = a[n]
        f = amplitude_drift(nu0, x)
        pred = x + f * dt + x * dw[n]
        a[n + 1] = x + 0.5 * (f + amplitude_drift(nu0, pred)) * dt + 0.5 * (x + pred) * dw[n]
    return Trajectory(TimeGrid(0.0, n_steps * dt, dt, n_steps), a[:, None], "amplitude")
