"""
Distribution and pathwise bounds of the noise functionals.

- 2 K~ is standard exponential: Kolmogorov-Smirnov test against Exp(1)
- z(0) <= sigma (K~ + 1) on every path, and |z(theta_0 w)| <= sigma K+-
- K2 <= C e^{sigma K+-} (1 + K+-) on every path

For the K2 bound both a fitted C (calibration paths) and the explicit
constant C = max(1, (1 + |nu|/sigma) / (e (eta - |nu| - sigma))) are checked.
The explicit constant follows from |w(s)| <= K+- + |s| and
|1 - e^x| <= |x| e^{|x|}, and needs eta > |nu| + sigma.
"""

import logging
from functools import partial
from typing import Dict, List

import numpy as np
from scipy.stats import kstest

from stochastic_rim.errors import ConfigurationError
from stochastic_rim.models.noise import compute_k_functionals, z_origin
from .common import noise_path
from .config import ExperimentConfig
from .fitting import calibrate_constant, fraction, is_calibration
from .report import ExperimentReport, RunClock, seed_manifest
from .runner import map_paths

logger = logging.getLogger(__name__)

MIN_TAIL = 50.0
MAX_DT = 0.01

COLUMNS = [
    "path", "calibration", "k_tilde", "k_tilde_neg", "k_pm", "two_k_tilde", "k2", "k2_envelope",
    "z0", "z0_bound", "z0_bound_ok", "z_origin", "z_origin_bound_ok", "k2_explicit_ok", "k2_fitted_ok",
]


def explicit_k2_constant(nu: float, sigma: float, eta: float) -> float:
    gap = eta - abs(nu) - sigma
    if gap <= 0:
        return float("nan")
    return max(1.0, (1.0 + abs(nu) / sigma) / (np.e * gap))


def _ktail_worker(config: ExperimentConfig, c_explicit: float, index: int) -> Dict:
    d = config.dynamics
    path = noise_path(config, index, d.sigma)
    k = compute_k_functionals(path, d.nu, d.sigma, d.eta, bridge=config.experiment.ktail.bridge)
    envelope = float(np.exp(d.sigma * k.k_pm) * (1.0 + k.k_pm))
    z0_bound = d.sigma * (k.k_tilde + 1.0)
    z_dyn = z_origin(path)
    return {
        "path": index,
        "calibration": is_calibration(index, config.monte_carlo.n_paths, config.monte_carlo.calibration_fraction),
        "k_tilde": k.k_tilde,
        "k_tilde_neg": k.k_tilde_neg,
        "k_pm": k.k_pm,
        "two_k_tilde": 2.0 * k.k_tilde,
        "k2": k.k2,
        "k2_envelope": envelope,
        "z0": path.z0,
        "z0_bound": z0_bound,
        "z0_bound_ok": bool(path.z0 <= z0_bound + 1e-12),
        "z_origin": z_dyn,
        "z_origin_bound_ok": bool(abs(z_dyn) <= d.sigma * k.k_pm + 1e-12),
        "k2_explicit_ok": bool(k.k2 <= c_explicit * envelope * (1.0 + 1e-12)),
        "z0_tail_term": path.z0_tail_term,
    }


def run_ktail(config: ExperimentConfig) -> ExperimentReport:
    clock = RunClock()
    d = config.dynamics
    if config.grid.tail < MIN_TAIL:
        raise ConfigurationError(f"ktail needs grid.tail >= {MIN_TAIL}, got {config.grid.tail}")
    if config.grid.dt > MAX_DT:
        raise ConfigurationError(f"ktail needs grid.dt <= {MAX_DT}, got {config.grid.dt}")
    if d.sigma <= 0:
        raise ConfigurationError("ktail needs sigma > 0")
    warnings: List[str] = []
    c_explicit = explicit_k2_constant(d.nu, d.sigma, d.eta)
    if np.isnan(c_explicit):
        warnings.append(f"eta={d.eta} <= |nu| + sigma: no explicit K2 constant")

    rows = map_paths(partial(_ktail_worker, config, c_explicit), range(config.monte_carlo.n_paths),
                     config.monte_carlo.threads)

    calibration = [r for r in rows if r["calibration"]]
    validation = [r for r in rows if not r["calibration"]] or calibration
    c_fit = calibrate_constant([r["k2"] for r in calibration], [r["k2_envelope"] for r in calibration])
    for r in rows:
        r["k2_fitted_ok"] = bool(r["k2"] <= c_fit * r["k2_envelope"] * (1.0 + 1e-12))

    ks = kstest(np.array([r["two_k_tilde"] for r in rows]), "expon")
    aggregates = {
        "n_paths": len(rows),
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "mean_two_k_tilde": float(np.mean([r["two_k_tilde"] for r in rows])),
        "z0_bound_fraction": fraction([r["z0_bound_ok"] for r in rows]),
        "z_origin_bound_fraction": fraction([r["z_origin_bound_ok"] for r in rows]),
        "k2_explicit_C": c_explicit,
        "k2_explicit_fraction": fraction([r["k2_explicit_ok"] for r in rows]),
        "k2_fitted_C": c_fit,
        "k2_fitted_validation_fraction": fraction([r["k2_fitted_ok"] for r in validation]),
        "bridge": config.experiment.ktail.bridge,
    }
    checks = {
        "ks": aggregates["ks_statistic"] < config.acceptance.ks_max,
        "z0_bound": aggregates["z0_bound_fraction"] == 1.0,
        "k2_bound": aggregates["k2_explicit_fraction"] == 1.0,
    }
    logger.info(
        f"ktail: KS={aggregates['ks_statistic']:.4f} (p={aggregates['ks_pvalue']:.3f}), "
        f"z0 bound on {aggregates['z0_bound_fraction']:.3f}, K2 fitted C={c_fit:.4g}"
    )
    report = ExperimentReport(
        experiment="ktail",
        columns=COLUMNS,
        rows=rows,
        aggregates=aggregates,
        checks=checks,
        config=config.snapshot(),
        seed_manifest=seed_manifest(config, bridge=config.experiment.ktail.bridge),
        warnings=warnings,
    )
    return clock.stop(report)
