import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional

import numpy as np

from stochastic_rim.errors import FixedPointError
from stochastic_rim.models.noise import NoisePath
from stochastic_rim.models.spectral import SpectralModel, ls_inverse_bs, norms
from .config import PerronConfig
from .history import HistoryFunction
from .operator import PerronOperator, _as_center

if TYPE_CHECKING:
    from .gchain import GChain

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ManifoldSample:
    """Fixed point v* of T(., xi) and the quantities derived from it."""

    # Argument of h, a full state vector supported on H_c
    xi: np.ndarray
    v_star: HistoryFunction
    # h(w, xi) = P_s v*(0)
    h: np.ndarray
    # e^{z(0)} h(w, xi): the graph value psi at graph_xi = e^{z(0)} xi
    psi: np.ndarray
    # L_s^{-1} B_s(graph_xi, graph_xi)
    quad_pred: np.ndarray
    z0: float
    iteration_count: int
    contraction_estimate: float
    # |T(v*) - v*| re-evaluated after convergence
    residual: float
    residuals: List[float] = field(default_factory=list)
    # |graph_xi| = |xi| e^{z(0)} <= R <= 1, with z(0) = z_origin(path), the OU value
    # that enters v = e^{-z} u (not the literal functional path.z0)
    in_hypothesis: bool = True
    g: Optional["GChain"] = None
    operator: Optional[PerronOperator] = field(default=None, repr=False)

    @property
    def graph_xi(self) -> np.ndarray:
        return np.exp(self.z0) * self.xi

    @property
    def g1(self):
        return None if self.g is None else self.g.g1_zero

    @property
    def g2(self):
        return None if self.g is None else self.g.g2

    @property
    def g3(self):
        return None if self.g is None else self.g.g3

    def shape_error(self, model: SpectralModel) -> float:
        """|psi - L_s^{-1} B_s(xi, xi)| at the graph coordinate."""
        return float(norms(model, self.psi - self.quad_pred))


def solve_fixed_point(
    model: SpectralModel,
    path: NoisePath,
    xi,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    config: Optional[PerronConfig] = None,
    operator: Optional[PerronOperator] = None,
    with_g_chain: bool = True,
) -> ManifoldSample:
    """
    Picard iteration v_{n+1} = T(v_n, xi) from v_0 = T(0, xi).

    Stops when |v_{n+1} - v_n| < tol (1 - q) / q, q being the largest
    observed ratio of successive increments, which certifies
    |v_{n+1} - v*| < tol.
    """
    op = operator or PerronOperator(model, path, config)
    cfg = op.config
    tol = cfg.tol if tol is None else tol
    max_iter = cfg.max_iter if max_iter is None else max_iter
    op.check_precondition()

    xi_vec = _as_center(model, xi)
    bound = op.conditions.contraction_bound
    q = bound if bound < 1.0 else 0.5

    v = op.free_solution(xi_vec)
    residuals: List[float] = []
    q_measured = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        v_next = op.apply(xi_vec, v)
        d = op.weighted_norm(v_next - v)
        if residuals and residuals[-1] > 0.0:
            q_measured = max(q_measured, d / residuals[-1])
            q = q_measured
        residuals.append(d)
        v = v_next
        if d == 0.0 or (q < 1.0 and d < tol * (1.0 - q) / max(q, 1e-300)):
            converged = True
            break
    if not converged:
        raise FixedPointError("Picard iteration did not converge", residuals[-1] if residuals else np.inf, iterations)

    residual = op.weighted_norm(op.apply(xi_vec, v) - v)
    z0 = op.z0
    h = model.project_s(v[-1])
    graph_xi = np.exp(z0) * xi_vec
    sample = ManifoldSample(
        xi=xi_vec,
        v_star=op.history(v),
        h=h,
        psi=np.exp(z0) * h,
        quad_pred=ls_inverse_bs(model, graph_xi),
        z0=z0,
        iteration_count=iterations,
        contraction_estimate=q_measured,
        residual=residual,
        residuals=residuals,
        in_hypothesis=bool(float(norms(model, graph_xi)) <= model.r_cut <= 1.0),
        operator=op,
    )
    logger.debug(
        f"Fixed point |xi|={float(norms(model, xi_vec)):.3e}: {iterations} iterations, q={q_measured:.3e}, "
        f"residual={residual:.2e}"
    )
    if with_g_chain:
        from .gchain import compute_g_chain

        compute_g_chain(sample)
    return sample


def psi_sample(
    model: SpectralModel,
    path: NoisePath,
    xi,
    config: Optional[PerronConfig] = None,
    operator: Optional[PerronOperator] = None,
    with_g_chain: bool = True,
) -> ManifoldSample:
    """Fixed point at argument e^{-z(0)} xi, so that sample.psi = psi(w, xi)."""
    op = operator or PerronOperator(model, path, config)
    xi_vec = _as_center(model, xi)
    return solve_fixed_point(model, path, np.exp(-op.z0) * xi_vec, operator=op, with_g_chain=with_g_chain)


def psi_graph(
    model: SpectralModel,
    path: NoisePath,
    xi,
    config: Optional[PerronConfig] = None,
    operator: Optional[PerronOperator] = None,
) -> np.ndarray:
    """psi(w, xi) = e^{z(0)} h(w, e^{-z(0)} xi)."""
    return psi_sample(model, path, xi, config, operator, with_g_chain=False).psi


def measure_contraction(
    operator: PerronOperator,
    xi,
    n_pairs: int = 8,
    scale: float = 0.1,
    rng: Optional[np.random.Generator] = None,
    center: Optional[np.ndarray] = None,
) -> float:
    """
    Largest observed |T v - T w| / |v - w| over random history pairs around
    ``center`` (default T(0, xi)), perturbations of weighted size ``scale * |xi|``.

    Even-numbered pairs draw independent perturbations per node; odd-numbered
    pairs use one direction at every node, which saturates the weighted norm
    along the whole history.
    """
    rng = rng or np.random.Generator(np.random.Philox(0))
    model = operator.model
    xi_vec = _as_center(model, xi)
    base = operator.free_solution(xi_vec) if center is None else center
    amplitude = scale * max(float(norms(model, xi_vec)), 1e-12)
    # Perturbations of unit weighted size at every node
    inv_weight = np.exp(-operator.log_weight)[:, None] / np.sqrt(model.inner_scale * model.n_total)

    worst = 0.0
    for k in range(n_pairs):
        if k % 2:
            d = rng.uniform(-1.0, 1.0, model.n_total)
            dv = np.broadcast_to(d, base.shape) * inv_weight * amplitude
            dw = -dv
        else:
            dv = rng.uniform(-1.0, 1.0, base.shape) * inv_weight * amplitude
            dw = rng.uniform(-1.0, 1.0, base.shape) * inv_weight * amplitude
        v, w = base + dv, base + dw
        denom = operator.weighted_norm(v - w)
        if denom == 0.0:
            continue
        ratio = operator.weighted_norm(operator.apply(xi_vec, v) - operator.apply(xi_vec, w)) / denom
        worst = max(worst, ratio)
    return worst
