import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize, minimize_scalar

from stochastic_rim.models.noise import NoisePath
from stochastic_rim.models.spectral import SpectralModel, norms
from .config import PerronConfig
from .operator import PerronOperator
from .solver import psi_sample

logger = logging.getLogger(__name__)

# Bracket and tolerance of the scalar distance minimisation
DIST_XATOL = 1e-8
BOUNDARY_SLACK = 1e-6


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    # Center coordinate(s) of the closest graph point
    xi: np.ndarray
    # Minimiser sits on the bracket boundary, i.e. outside the local chart
    at_boundary: bool


class PsiCache:
    """
    psi(w, .) for one path: exact fixed-point solves memoised by xi, plus a
    cubic spline through a uniform xi-grid on [-2R, 2R] (n_c = 1 only).
    """

    def __init__(self, model: SpectralModel, path: NoisePath, config: Optional[PerronConfig] = None):
        self.model = model
        self.operator = PerronOperator(model, path, config)
        self.config = self.operator.config
        self.bound = 2.0 * model.r_cut
        self._exact: Dict[tuple, np.ndarray] = {}
        self._spline: Optional[CubicSpline] = None

    def exact(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        key = tuple(float(x) for x in xi)
        cached = self._exact.get(key)
        if cached is None:
            cached = psi_sample(self.model, self.operator.path, xi, operator=self.operator, with_g_chain=False).psi
            self._exact[key] = cached
        return cached

    def build(self) -> CubicSpline:
        if self._spline is None:
            nodes = np.linspace(-self.bound, self.bound, self.config.psi_nodes)
            values = np.stack([self.exact([x]) for x in nodes])
            self._spline = CubicSpline(nodes, values, axis=0)
            logger.debug(f"psi cache built on {len(nodes)} nodes")
        return self._spline

    def interpolated(self, xi: float) -> np.ndarray:
        return self.build()(xi)

    def graph_point(self, xi, exact: bool = True) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        psi = self.exact(xi) if exact else self.interpolated(float(xi[0]))
        point = np.array(psi, dtype=np.float64, copy=True)
        point[: self.model.n_c] = xi
        return point


def dist_to_manifold(
    model: SpectralModel,
    path: NoisePath,
    u: np.ndarray,
    config: Optional[PerronConfig] = None,
    cache: Optional[PsiCache] = None,
) -> DistanceResult:
    """
    min over xi in [-2R, 2R] of |u - (xi + psi(w, xi))|.

    The minimiser is located on the spline cache, then refined with exact
    solves inside one grid spacing of it.
    """
    cache = cache or PsiCache(model, path, config)
    u = np.asarray(u, dtype=np.float64)
    lo, hi = -cache.bound, cache.bound

    if model.n_c > 1:
        # Small center spaces: direct search with exact solves from P_c u
        def objective_nd(x):
            return float(norms(model, u - cache.graph_point(np.clip(x, lo, hi))))

        res = minimize(objective_nd, np.clip(u[: model.n_c], lo, hi), method="Nelder-Mead",
                       options={"xatol": DIST_XATOL, "fatol": 1e-12})
        xi = np.clip(res.x, lo, hi)
        at_boundary = bool(np.any(np.abs(np.abs(xi) - cache.bound) < BOUNDARY_SLACK))
        return DistanceResult(float(res.fun), xi, at_boundary)

    def coarse(x):
        return float(norms(model, u - cache.graph_point(x, exact=False)))

    res = minimize_scalar(coarse, bounds=(lo, hi), method="bounded", options={"xatol": DIST_XATOL})
    spacing = (hi - lo) / max(cache.config.psi_nodes - 1, 1)
    a, b = max(lo, res.x - spacing), min(hi, res.x + spacing)

    def fine(x):
        return float(norms(model, u - cache.graph_point(x, exact=True)))

    res = minimize_scalar(fine, bounds=(a, b), method="bounded", options={"xatol": DIST_XATOL})
    xi = float(res.x)
    at_boundary = min(abs(xi - lo), abs(xi - hi)) < BOUNDARY_SLACK
    if at_boundary:
        logger.warning(f"Distance minimiser xi={xi:.4g} at bracket boundary; point outside local chart")
    return DistanceResult(float(res.fun), np.array([xi]), bool(at_boundary))
