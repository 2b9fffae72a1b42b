"""
Single-path simulation for plotting: the full system plus, on request, the
reduced flow on the manifold, the run without cut-off and the amplitude
equation. Linear models are compared with the closed-form solution.
"""

import logging
from typing import Dict, List

import numpy as np

from stochastic_rim.errors import ConfigurationError
from stochastic_rim.models.dynamics import (
    integrate_amplitude,
    integrate_reduced,
    integrate_v,
    linear_benchmark_solution,
    to_u,
)
from stochastic_rim.models.noise import ou_residual, rescale_path, z_origin
from stochastic_rim.models.spectral import SpectralModel, norms
from .common import noise_path
from .config import ExperimentConfig
from .report import TAIL_TERM_KEY, ExperimentReport, RunClock, TrajectoryExport, seed_manifest

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["t", "u_norm", "u1", "ps_norm"]


def initial_state(config: ExperimentConfig, model: SpectralModel) -> np.ndarray:
    coeffs = list(config.experiment.simulate.u0)
    if len(coeffs) > model.n_total:
        raise ConfigurationError(f"u0 has {len(coeffs)} coefficients, model has {model.n_total} modes")
    u0 = np.zeros(model.n_total)
    u0[: len(coeffs)] = coeffs
    return u0


def run_simulate(config: ExperimentConfig) -> ExperimentReport:
    clock = RunClock()
    sim = config.experiment.simulate
    d = config.dynamics
    model = config.build_model()
    t_end, dt = config.grid.t_end, config.grid.dt

    path = noise_path(config, sim.path_index, d.sigma, horizon=t_end)
    u0 = initial_state(config, model)
    v0 = np.exp(-z_origin(path)) * u0
    full = to_u(integrate_v(model, path, v0, t_end, dt, cutoff=sim.cutoff, nu=d.nu), path)
    u = full.states
    u_norm = norms(model, u)

    columns = list(BASE_COLUMNS)
    series: Dict[str, np.ndarray] = {
        "t": full.times,
        "u_norm": u_norm,
        "u1": u[:, 0],
        "ps_norm": norms(model, model.project_s(u)),
    }
    trajectories = {"full": TrajectoryExport(full, model)}
    aggregates: Dict = {"final_norm": float(u_norm[-1]), "max_norm": float(np.max(u_norm))}
    checks: Dict[str, bool] = {}
    warnings: List[str] = []

    if sim.compare_cutoff:
        other = to_u(integrate_v(model, path, v0, t_end, dt, cutoff=not sim.cutoff, nu=d.nu), path)
        diff = norms(model, other.states - u)
        series["cutoff_diff"] = diff
        columns.append("cutoff_diff")
        inside = np.maximum.accumulate(np.maximum(u_norm, norms(model, other.states))) <= model.r_cut
        agree = float(np.max(diff[inside])) if np.any(inside) else 0.0
        aggregates["cutoff_diff_inside_ball"] = agree
        checks["cutoff_agreement"] = agree <= 1e-12 * max(model.r_cut, 1e-300)
        trajectories["other-cutoff"] = TrajectoryExport(other, model)

    if sim.reduced is not None:
        reduced = to_u(
            integrate_reduced(model, path, u0[: model.n_c], t_end, dt, mode=sim.reduced,
                              config=config.perron_config(), h_refresh=config.perron.h_refresh),
            path,
        )
        series["reduced_u1"] = reduced.states[:, 0]
        columns.append("reduced_u1")
        aggregates["reduced_max_diff"] = float(np.max(norms(model, reduced.states - u)))
        trajectories[f"reduced-{sim.reduced}"] = TrajectoryExport(reduced, model)

    if sim.amplitude:
        if d.sigma <= 0:
            raise ConfigurationError("the amplitude trajectory uses eps = sigma > 0")
        eps = d.sigma
        slow = rescale_path(path, eps)
        amp = integrate_amplitude(d.nu / eps ** 2, u0[0] / eps, eps ** 2 * t_end, slow.dt, slow)
        series["amplitude_u1"] = eps * amp.states[:, 0]
        columns.append("amplitude_u1")
        trajectories["amplitude"] = TrajectoryExport(amp)

    if model.name == "linear":
        exact = linear_benchmark_solution(u0, model.lam, path, t_end)
        scale = max(float(norms(model, exact)), 1e-300)
        rel = float(norms(model, u[-1] - exact)) / scale
        residual = ou_residual(path) if d.sigma > 0 else 0.0
        aggregates.update(benchmark_rel_error=rel, ou_residual=residual)
        checks["benchmark"] = rel <= 1.01 * np.expm1(residual) + 1e-12

    rows = [
        {name: float(values[i]) for name, values in series.items()}
        for i in range(len(full.times))
    ]
    rows[0][TAIL_TERM_KEY] = path.z0_tail_term
    logger.info(f"simulate: |u(T)|={aggregates['final_norm']:.4e}, max |u|={aggregates['max_norm']:.4e}")
    report = ExperimentReport(
        experiment="simulate",
        columns=columns,
        rows=rows,
        aggregates=aggregates,
        checks=checks,
        config=config.snapshot(),
        seed_manifest=seed_manifest(config, path_index=sim.path_index),
        warnings=warnings,
        trajectories=trajectories,
    )
    return clock.stop(report)
