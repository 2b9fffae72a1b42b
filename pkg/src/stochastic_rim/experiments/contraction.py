"""Measured Picard contraction against the analytic bound of the operator."""

import logging
from functools import partial
from typing import Dict, List

import numpy as np

from stochastic_rim.errors import FixedPointError, PreconditionError
from stochastic_rim.models.manifold import PerronOperator, measure_contraction, psi_sample
from stochastic_rim.models.spectral import SpectralModel, norms
from .common import experiment_rng, noise_path, require_conditions
from .config import ExperimentConfig
from .fitting import fraction
from .report import ExperimentReport, RunClock, seed_manifest
from .runner import map_paths

logger = logging.getLogger(__name__)

# Residuals below this multiple of |xi| are round-off and left out of the ratios
RESIDUAL_FLOOR = 1e-13

COLUMNS = [
    "path", "xi_norm", "bound", "measured", "max_residual_ratio", "iterations",
    "within_bound", "geometric", "status",
]


def residual_ratios(residuals: List[float], floor: float) -> np.ndarray:
    r = np.asarray(residuals, dtype=np.float64)
    if len(r) < 2:
        return np.zeros(0)
    prev, nxt = r[:-1], r[1:]
    mask = (prev > floor) & (nxt > floor)
    return nxt[mask] / prev[mask]


def _contraction_worker(config: ExperimentConfig, model: SpectralModel, index: int) -> List[Dict]:
    knobs = config.experiment.contraction
    slack = config.acceptance.residual_ratio_slack
    path = noise_path(config, index, config.dynamics.sigma)
    op = PerronOperator(model, path, config.perron_config())
    bound = op.conditions.contraction_bound
    unit = float(norms(model, model.basis_vector(1)))
    rng = experiment_rng(config, index)
    rows = []
    for ratio in knobs.xi_ratios:
        xi_norm = ratio * model.r_cut
        row = {"path": index, "xi_norm": xi_norm, "bound": bound, "z0_tail_term": path.z0_tail_term}
        try:
            sample = psi_sample(model, path, [xi_norm / unit], operator=op, with_g_chain=False)
        except (FixedPointError, PreconditionError) as e:
            logger.warning(f"contraction path {index} |xi|={xi_norm:.3g}: {e}")
            row["status"] = "failed"
            rows.append(row)
            continue
        measured = measure_contraction(
            op, sample.xi, knobs.n_pairs, knobs.perturbation, rng, center=sample.v_star.values
        )
        ratios = residual_ratios(sample.residuals, RESIDUAL_FLOOR * max(xi_norm, 1e-300))
        max_ratio = float(np.max(ratios)) if ratios.size else 0.0
        row.update(
            measured=measured,
            max_residual_ratio=max_ratio,
            iterations=sample.iteration_count,
            within_bound=bool(measured <= bound),
            geometric=bool(max_ratio <= slack * measured),
            status="ok",
        )
        rows.append(row)
    return rows


def run_contraction(config: ExperimentConfig) -> ExperimentReport:
    clock = RunClock()
    model = config.build_model()
    warnings: List[str] = []
    report_c = require_conditions(config, model, ("condition1",), warnings=warnings)

    per_path = map_paths(partial(_contraction_worker, config, model), range(config.monte_carlo.n_paths),
                         config.monte_carlo.threads)
    rows = [r for chunk in per_path for r in chunk]
    ok = [r for r in rows if r.get("status") == "ok"]
    aggregates = {
        "analytic_bound": report_c.contraction_bound,
        "max_measured": max((r["measured"] for r in ok), default=float("nan")),
        "max_residual_ratio": max((r["max_residual_ratio"] for r in ok), default=float("nan")),
        "within_bound_fraction": fraction([r["within_bound"] for r in ok]),
        "geometric_fraction": fraction([r["geometric"] for r in ok]),
        "n_failed": len(rows) - len(ok),
    }
    checks = {
        "within_bound": aggregates["within_bound_fraction"] == 1.0,
        "geometric": aggregates["geometric_fraction"] == 1.0,
    }
    logger.info(
        f"contraction: measured up to {aggregates['max_measured']:.3e} against bound "
        f"{aggregates['analytic_bound']:.3e}"
    )
    report = ExperimentReport(
        experiment="contraction",
        columns=COLUMNS,
        rows=rows,
        aggregates=aggregates,
        checks=checks,
        config=config.snapshot(),
        seed_manifest=seed_manifest(config),
        warnings=warnings,
    )
    return clock.stop(report)
