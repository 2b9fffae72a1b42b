"""
Exponential attraction towards the random manifold.

Solutions started off the manifold inside B_R are integrated forward; at the
sample times their distance to M(theta_t w) is compared with the pathwise
bound 2 R D(t, w) e^{-lambda* t}, D(t, w) = exp(z(theta_t w) + int_0^t z).
Paths that leave B_R before the horizon are flagged and excluded.
"""

import logging
from functools import partial
from typing import Dict, List

import numpy as np

from stochastic_rim.errors import BlowUpError, ConfigurationError, FixedPointError, PreconditionError
from stochastic_rim.models.dynamics import ForwardNoise, integrate_v, to_u
from stochastic_rim.models.manifold import PsiCache, dist_to_manifold
from stochastic_rim.models.noise import shift_path, z_origin
from stochastic_rim.models.spectral import SpectralModel, norms
from .common import experiment_rng, noise_path, random_state, require_conditions
from .config import ExperimentConfig
from .fitting import decay_rate, fraction
from .report import ExperimentReport, RunClock, seed_manifest
from .runner import map_paths

logger = logging.getLogger(__name__)

COLUMNS = [
    "path", "t", "u_norm", "distance", "bound", "D", "satisfied", "exited", "at_boundary", "xi", "status",
]


def sample_times(t_end: float, every: float, dt: float) -> np.ndarray:
    stride = max(1, int(round(every / dt)))
    n_steps = int(round(t_end / dt))
    return np.arange(0, n_steps + 1, stride) * dt


def _initial_state(config: ExperimentConfig, model: SpectralModel, path, index: int, cfg) -> np.ndarray:
    att = config.experiment.attraction
    size = att.u0_ratio * model.r_cut
    if att.on_manifold:
        unit = float(norms(model, model.basis_vector(1)))
        sign = 1.0 if experiment_rng(config, index).random() < 0.5 else -1.0
        return PsiCache(model, path, cfg).graph_point([sign * size / unit])
    return random_state(model, experiment_rng(config, index), size)


def _attraction_worker(config: ExperimentConfig, model: SpectralModel, index: int) -> List[Dict]:
    att = config.experiment.attraction
    d = config.dynamics
    t_end = config.grid.t_end
    dt = config.grid.dt
    cfg = config.perron_config(psi_nodes=att.psi_nodes)

    path = noise_path(config, index, d.sigma, horizon=t_end)
    rows: List[Dict] = []
    try:
        u0 = _initial_state(config, model, path, index, cfg)
        traj = to_u(integrate_v(model, path, np.exp(-z_origin(path)) * u0, t_end, dt, cutoff=True, nu=d.nu), path)
    except (BlowUpError, FixedPointError, PreconditionError) as e:
        logger.warning(f"attraction path {index}: {e}")
        return [{"path": index, "t": 0.0, "status": "failed", "exited": True, "z0_tail_term": path.z0_tail_term}]

    forward = ForwardNoise(path, t_end, dt)
    lam_star = model.lambda_star
    exited = False
    for t in sample_times(t_end, att.sample_every, dt):
        n = traj.grid.index_of(t)
        u = traj.states[n]
        u_norm = float(norms(model, u))
        exited = exited or u_norm > model.r_cut
        big_d = float(np.exp(forward.z[n] + forward.big_z[n]))
        bound = 2.0 * model.r_cut * big_d * np.exp(-lam_star * t)
        row = {
            "path": index, "t": float(t), "u_norm": u_norm, "D": big_d, "bound": float(bound), "exited": exited,
            "z0_tail_term": path.z0_tail_term,
        }
        if exited:
            row["status"] = "exited"
            rows.append(row)
            continue
        shifted = shift_path(path, float(t))
        try:
            res = dist_to_manifold(model, shifted, u, cache=PsiCache(model, shifted, cfg))
        except (FixedPointError, PreconditionError) as e:
            logger.warning(f"attraction path {index} t={t:.3f}: {e}")
            row["status"] = "failed"
            rows.append(row)
            continue
        row.update(
            distance=res.distance,
            satisfied=bool(res.distance <= bound),
            at_boundary=res.at_boundary,
            xi=float(res.xi[0]),
            status="ok",
        )
        rows.append(row)
    logger.debug(f"attraction path {index} done, exited={exited}")
    return rows


def summarize_paths(rows: List[Dict], lam_star: float, floor: float, min_points: int) -> List[Dict]:
    """Per-path bound satisfaction and fitted decay rate from the sample rows."""
    out = []
    for index in sorted({r["path"] for r in rows}):
        mine = [r for r in rows if r["path"] == index]
        flagged = any(r.get("status") != "ok" for r in mine)
        ok = [r for r in mine if r.get("status") == "ok"]
        rate = decay_rate([r["t"] for r in ok], [r["distance"] for r in ok], floor, min_points)
        out.append({
            "path": index,
            "flagged": flagged,
            "bound_all": bool(ok) and all(r["satisfied"] for r in ok),
            "rate": rate,
            "rate_ok": None if rate is None else bool(rate >= 0.5 * lam_star),
        })
    return out


def run_attraction(config: ExperimentConfig) -> ExperimentReport:
    clock = RunClock()
    model = config.build_model()
    warnings: List[str] = []
    require_conditions(config, model, warnings=warnings)
    lam_star = model.lambda_star
    if not lam_star > 4.0 * config.dynamics.nu:
        raise ConfigurationError(f"attraction needs lambda* > 4 nu, got lambda*={lam_star}, nu={config.dynamics.nu}")
    att = config.experiment.attraction

    per_path = map_paths(partial(_attraction_worker, config, model), range(config.monte_carlo.n_paths),
                         config.monte_carlo.threads)
    rows = [r for chunk in per_path for r in chunk]

    paths = summarize_paths(rows, lam_star, att.distance_floor, att.min_fit_points)
    unflagged = [p for p in paths if not p["flagged"]]
    rated = [p for p in unflagged if p["rate"] is not None]
    if len(rated) < len(unflagged):
        warnings.append(f"{len(unflagged) - len(rated)} paths had too few distances above the fit floor")
    aggregates = {
        "lambda_star": lam_star,
        "n_paths": len(paths),
        "n_flagged": len(paths) - len(unflagged),
        "bound_fraction": fraction([p["bound_all"] for p in unflagged]),
        "rate_fraction": fraction([p["rate_ok"] for p in rated]),
        "median_rate": float(np.median([p["rate"] for p in rated])) if rated else float("nan"),
        "rates": [p["rate"] for p in paths],
    }
    checks = {
        "pathwise_bound": aggregates["bound_fraction"] >= config.acceptance.attraction_bound_fraction,
        "decay_rate": aggregates["rate_fraction"] >= config.acceptance.attraction_rate_fraction,
    }
    logger.info(
        f"attraction: bound on {aggregates['bound_fraction']:.3f}, rate >= lambda*/2 on "
        f"{aggregates['rate_fraction']:.3f} of {len(unflagged)} unflagged paths"
    )
    report = ExperimentReport(
        experiment="attract",
        columns=COLUMNS,
        rows=rows,
        aggregates=aggregates,
        checks=checks,
        config=config.snapshot(),
        seed_manifest=seed_manifest(config),
        warnings=warnings,
    )
    return clock.stop(report)
