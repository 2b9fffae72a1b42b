"""
Discretised Lyapunov-Perron operator on the weighted history space.

For a history v on [-T, 0] and xi in H_c,

    T(v)(t) = e^{nu t + Z(t)} xi
              + int_0^t e^{nu (t-s) + Z(t) - Z(s)} e^{-z(s)} P_c B^R(v(s) e^{z(s)}) ds
              + int_{-T}^t e^{(-L_s + nu)(t-s) + Z(t) - Z(s)} e^{-z(s)} P_s B^R(v(s) e^{z(s)}) ds

with Z(t) = int_0^t z. Pulling e^{Z(t)} out of both integrals leaves
constant-coefficient kernels acting on g(s) = e^{-Z(s)} a(s). Each kernel is
integrated exactly per mode over a step with g held at its interval mean,
which turns both integrals into first-order linear recurrences.
"""

import logging
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import lfilter
from scipy.special import exprel

from stochastic_rim.errors import ConfigurationError, NoiseRangeError, PreconditionError
from stochastic_rim.models.noise import NoisePath, TimeGrid, z_origin
from stochastic_rim.models.spectral import (
    ConditionReport,
    SpectralModel,
    apply_b,
    check_conditions,
    cutoff_profile,
    norms,
)
from .config import PerronConfig
from .history import HistoryFunction, weighted_sup

logger = logging.getLogger(__name__)


class PerronOperator:
    """The operator T bound to one model, one noise path and one parameter set."""

    def __init__(self, model: SpectralModel, path: NoisePath, config: Optional[PerronConfig] = None):
        config = config or PerronConfig()
        if path.z is None:
            raise ConfigurationError("noise path has no OU component")
        if config.stride < 1:
            raise ConfigurationError(f"stride must be >= 1, got {config.stride}")
        self.model = model
        self.path = path
        self.config = config
        self.conditions: ConditionReport = check_conditions(model, config.nu, config.eta, config.delta, config.lam)

        tail_factor = np.exp(-(config.lam - config.eta - config.nu) * config.window)
        if tail_factor > max(config.tol, 1e-12):
            logger.warning(f"History window {config.window} leaves tail factor {tail_factor:.2e} above tolerance")

        h = path.dt * config.stride
        n_nodes = int(round(config.window / h))
        zi = path.zero_index
        lo = zi - n_nodes * config.stride
        if lo < 0:
            raise NoiseRangeError(
                f"history underflow: window {config.window} needs tail {n_nodes * h:.4g}, path has {path.tail_T:.4g}"
            )
        self.h = h
        self.grid = TimeGrid(-n_nodes * h, 0.0, h, n_nodes)
        self.times = self.grid.times

        fine_t = path.times[lo: zi + 1]
        fine_z = path.z[lo: zi + 1]
        cum = cumulative_trapezoid(fine_z, fine_t, initial=0.0)
        nodes = np.arange(0, n_nodes * config.stride + 1, config.stride)
        self.big_z = (cum - cum[-1])[nodes]
        self.z_nodes = fine_z[nodes]
        self.z0 = z_origin(path)
        self.log_weight = config.eta * self.times - self.big_z

        nu = config.nu
        mu_s = -model.lam_s + nu
        self._decay_s = np.exp(mu_s * h)
        self._gain_s = h * exprel(mu_s * h)
        self._decay_c = np.exp(-nu * h)
        self._gain_c = h * exprel(-nu * h)
        # Weights of int_{t_i}^{t_{i+1}} e^{lam_k s} ds, used by the g-chain integrals
        lam_s = model.lam_s
        self.backward_weights = np.exp(np.outer(self.times[1:], lam_s)) * (h * exprel(-lam_s * h))[None, :]

    @property
    def n_c(self) -> int:
        return self.model.n_c

    def check_precondition(self) -> None:
        if self.conditions.condition1:
            return
        msg = (
            f"contraction condition fails: bound {self.conditions.contraction_bound:.4g} >= 1 "
            f"(R={self.model.r_cut}, C_B={self.conditions.c_b:.4g})"
        )
        if self.config.strict:
            raise PreconditionError(msg)
        logger.debug(msg + "; continuing with measured contraction")

    def history(self, values: np.ndarray) -> HistoryFunction:
        return HistoryFunction(self.grid, values, self.config.eta, self.path, self.log_weight)

    def zero_history(self) -> HistoryFunction:
        return self.history(np.zeros((len(self.times), self.model.n_total)))

    def weighted_norm(self, values: np.ndarray) -> float:
        return weighted_sup(self.model, values, self.log_weight)

    def chi(self, values: np.ndarray) -> np.ndarray:
        """chi_R(|v(t) e^{z(t)}|) per node."""
        u = values * np.exp(self.z_nodes)[:, None]
        return cutoff_profile(norms(self.model, u), self.model.r_cut)

    def nonlinearity(self, values: np.ndarray) -> np.ndarray:
        """e^{-z} B^R(v e^z) = chi e^{z} B(v, v) per node."""
        return (self.chi(values) * np.exp(self.z_nodes))[:, None] * apply_b(self.model, values)

    def stable_integral(self, a: np.ndarray) -> np.ndarray:
        """
        int_{-T}^t e^{(-L_s+nu)(t-s) + Z(t) - Z(s)} a_s(s) ds at every node,
        returned as a full state array with zero center part.
        """
        g = np.exp(-self.big_z)[:, None] * a
        g_mid = 0.5 * (g[:-1] + g[1:])
        out = np.zeros_like(a)
        for i, k in enumerate(range(self.n_c, self.model.n_total)):
            x = self._gain_s[i] * g_mid[:, k]
            out[1:, k] = lfilter([1.0], [1.0, -self._decay_s[i]], x)
        return np.exp(self.big_z)[:, None] * out

    def center_integral(self, a: np.ndarray) -> np.ndarray:
        """int_t^0 e^{nu(t-s) + Z(t) - Z(s)} a_c(s) ds at every node."""
        g = np.exp(-self.big_z)[:, None] * a[:, : self.n_c]
        g_mid = 0.5 * (g[:-1] + g[1:])
        out = np.zeros((len(self.times), self.n_c))
        x = self._gain_c * g_mid[::-1]
        out[:-1] = lfilter([1.0], [1.0, -self._decay_c], x, axis=0)[::-1]
        return np.exp(self.big_z)[:, None] * out

    def apply(self, xi: np.ndarray, values: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=np.float64)
        if values.shape != (len(self.times), self.model.n_total):
            raise ConfigurationError(
                f"history shape {values.shape} does not match grid ({len(self.times)}, {self.model.n_total})"
            )
        a = self.nonlinearity(values)
        out = self.stable_integral(a)
        free = np.exp(self.config.nu * self.times + self.big_z)[:, None] * xi[None, : self.n_c]
        out[:, : self.n_c] = free - self.center_integral(a)
        return out

    def free_solution(self, xi: np.ndarray) -> np.ndarray:
        """T(0)(t) = e^{nu t + Z(t)} xi."""
        return self.apply(xi, np.zeros((len(self.times), self.model.n_total)))

    def backward_integral(self, f: np.ndarray) -> np.ndarray:
        """int_{-T}^0 e^{L_s s} f_s(s) ds per stable mode, f given at the nodes."""
        f_mid = 0.5 * (f[:-1] + f[1:])
        return np.sum(self.backward_weights * f_mid, axis=0)


def _as_center(model: SpectralModel, xi) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    if xi.shape == (model.n_c,):
        out = np.zeros(model.n_total)
        out[: model.n_c] = xi
        return out
    if xi.shape != (model.n_total,):
        raise ConfigurationError(f"xi must have {model.n_c} or {model.n_total} components")
    if np.any(xi[model.n_c:] != 0.0):
        raise ConfigurationError("xi must lie in H_c")
    return xi


def apply_T(
    model: SpectralModel,
    path: NoisePath,
    xi,
    v: HistoryFunction,
    config: Optional[PerronConfig] = None,
    operator: Optional[PerronOperator] = None,
) -> HistoryFunction:
    """One application of T(., xi) to the history v."""
    op = operator or PerronOperator(model, path, config)
    if v.grid != op.grid:
        raise ConfigurationError("history grid does not match the operator grid")
    return op.history(op.apply(_as_center(model, xi), v.values))
