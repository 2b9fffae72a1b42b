"""
Amplitude-equation approximation near the first bifurcation.

With sigma = eps and nu = nu0 eps^2, Burgers started at u0 = eps a0 sin x
stays close to eps a(eps^2 t) sin x up to t = eps^{-2}, where a solves

    da = (nu0 a - a^3 / 12) dT + a o dW,   W(T) = eps w(T / eps^2).

Both equations are driven by the same Brownian path.
"""

import logging
from functools import partial
from typing import Dict, List

import numpy as np

from stochastic_rim.errors import BlowUpError, ConfigurationError
from stochastic_rim.models.dynamics import integrate_amplitude, integrate_v, to_u
from stochastic_rim.models.noise import rescale_path, z_origin
from stochastic_rim.models.spectral import SpectralModel, norms
from .common import noise_path
from .config import ExperimentConfig
from .fitting import fraction, is_non_increasing
from .report import ExperimentReport, RunClock, seed_manifest
from .runner import map_paths

logger = logging.getLogger(__name__)

MAX_EPS = 0.2

COLUMNS = ["eps", "path", "t_end", "error", "tolerance", "satisfied", "ps_sup", "ps_ratio", "status"]


def _stride(config: ExperimentConfig, eps: float) -> int:
    ratio = config.experiment.amplitude.amplitude_dt / (eps * eps * config.grid.dt)
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
        raise ConfigurationError(
            f"amplitude_dt must be a multiple of eps^2 dt; eps={eps} gives ratio {ratio}"
        )
    return stride


def compare_amplitude(config: ExperimentConfig, model: SpectralModel, eps: float, index: int) -> Dict:
    """Sup over t <= eps^{-2} of |u_1(t) - eps a(eps^2 t)| for one path."""
    amp = config.experiment.amplitude
    tolerance = amp.tolerance_factor * eps * eps
    row = {"eps": eps, "path": index, "tolerance": tolerance}
    if eps == 0.0:
        # Zero noise and zero amplitude: both sides vanish identically
        row.update(t_end=0.0, error=0.0, satisfied=True, ps_sup=0.0, ps_ratio=0.0, status="ok")
        return row

    dt = config.grid.dt
    t_end = 1.0 / (eps * eps)
    row["t_end"] = t_end
    stride = _stride(config, eps)
    path = noise_path(config, index, eps, horizon=t_end, tail=amp.tail)
    row["z0_tail_term"] = path.z0_tail_term

    u0 = model.basis_vector(1, eps * amp.a0)
    try:
        traj = integrate_v(model, path, np.exp(-z_origin(path)) * u0, t_end, dt, cutoff=False,
                           nu=amp.nu0 * eps * eps)
    except BlowUpError as e:
        logger.warning(f"amplitude eps={eps} path {index}: {e}")
        row.update(status="blowup", satisfied=False)
        return row
    u = to_u(traj, path).states
    a = integrate_amplitude(amp.nu0, amp.a0, 1.0, amp.amplitude_dt, rescale_path(path, eps)).states[:, 0]

    n_nodes = min(len(a), (len(u) - 1) // stride + 1)
    error = float(np.max(np.abs(u[: n_nodes * stride: stride, 0] - eps * a[:n_nodes])))
    ps_sup = float(np.max(norms(model, model.project_s(u))))
    row.update(
        error=error,
        satisfied=bool(error <= tolerance),
        ps_sup=ps_sup,
        ps_ratio=ps_sup / (eps * eps),
        status="ok",
    )
    return row


def _amplitude_worker(config: ExperimentConfig, model: SpectralModel, index: int) -> List[Dict]:
    return [compare_amplitude(config, model, eps, index) for eps in config.experiment.amplitude.eps_sweep]


def run_amplitude(config: ExperimentConfig) -> ExperimentReport:
    clock = RunClock()
    amp = config.experiment.amplitude
    for eps in amp.eps_sweep:
        if eps < 0 or eps > MAX_EPS:
            raise ConfigurationError(f"amplitude runs need 0 <= eps <= {MAX_EPS}, got {eps}")
    if config.model.kind != "burgers":
        raise ConfigurationError("the amplitude equation is derived for the Burgers model")
    model = config.build_model()

    per_path = map_paths(partial(_amplitude_worker, config, model), range(config.monte_carlo.n_paths),
                         config.monte_carlo.threads)
    rows = [r for chunk in per_path for r in chunk]

    per_eps = {}
    medians = []
    for eps in sorted(amp.eps_sweep, reverse=True):
        mine = [r for r in rows if r["eps"] == eps]
        ok = [r for r in mine if r["status"] == "ok"]
        median = float(np.median([r["error"] for r in ok])) if ok else float("nan")
        medians.append(median)
        per_eps[str(eps)] = {
            "satisfied_fraction": fraction([r["satisfied"] for r in mine]),
            "median_error": median,
            "max_error": max((r["error"] for r in ok), default=float("nan")),
            "max_ps_ratio": max((r["ps_ratio"] for r in ok), default=float("nan")),
            "n_flagged": len(mine) - len(ok),
        }
    aggregates = {"per_eps": per_eps, "median_errors_by_decreasing_eps": medians}
    checks = {
        "fraction": all(v["satisfied_fraction"] >= config.acceptance.amplitude_fraction for v in per_eps.values()),
        "error_decreases": is_non_increasing(medians),
    }
    logger.info(f"amplitude: median errors {medians} for eps {sorted(amp.eps_sweep, reverse=True)}")
    report = ExperimentReport(
        experiment="amplitude",
        columns=COLUMNS,
        rows=rows,
        aggregates=aggregates,
        checks=checks,
        config=config.snapshot(),
        seed_manifest=seed_manifest(config, eps_sweep=list(amp.eps_sweep)),
    )
    return clock.stop(report)
