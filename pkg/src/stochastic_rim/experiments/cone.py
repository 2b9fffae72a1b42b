"""
Cone invariance of differences of solutions.

Two solutions v, v~ of the transformed equation are driven by the same
path. Their difference splits into p = P_c(v - v~) and q = P_s(v - v~); the
cone is K_delta = {|q| < delta |p|}.

Key checks:
- once the difference enters the cone it never leaves it again
- while it is outside, |q(t)|^2 <= |u0 - u0~|^2 exp(-lambda*/2 t - 2 z(0) + 2 int_0^t z)
"""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional

import numpy as np

from stochastic_rim.errors import BlowUpError
from stochastic_rim.models.dynamics import ForwardNoise, integrate_v
from stochastic_rim.models.noise import z_origin
from stochastic_rim.models.spectral import SpectralModel, norms
from .common import experiment_rng, noise_path, random_state, require_conditions
from .config import ExperimentConfig
from .fitting import fraction
from .report import ExperimentReport, RunClock, seed_manifest
from .runner import map_paths

logger = logging.getLogger(__name__)

COLUMNS = [
    "path", "kind", "p0", "q0", "entered", "entered_at", "re_exits", "max_excess",
    "bound_ok", "bound_max_ratio", "literal_bound_ok", "status",
]


@dataclass
class ConeAnalysisResult:
    """State of the cone monitor after a trajectory pair."""

    # Did the difference ever satisfy |q| < delta |p|?
    entered: bool

    # First sample time inside the cone
    entered_at: Optional[float]

    # Samples after entry where |q| - delta |p| exceeded the tolerance
    re_exits: int

    # Largest |q| - delta |p| seen after entry
    max_excess: float


class ConeMonitor:
    """
    Tracks a difference pair through time and records cone entry and
    re-exit events.
    """

    def __init__(self, delta: float, tol: float = 1e-8):
        self.delta = delta
        self.tol = tol
        self.reset()

    def reset(self):
        self.entered = False
        self.entered_at = None
        self.re_exits = 0
        self.max_excess = -np.inf

    def inside(self, p: float, q: float) -> bool:
        return q < self.delta * p or (p == 0.0 and q == 0.0)

    def step(self, t: float, p: float, q: float) -> bool:
        """Feed one sample; returns whether the difference is in the cone."""
        if not self.entered:
            if self.inside(p, q):
                self.entered = True
                self.entered_at = t
            return self.entered
        excess = q - self.delta * p
        self.max_excess = max(self.max_excess, excess)
        if excess > self.tol:
            self.re_exits += 1
            logger.warning(f"Cone re-exit at t={t:.4f}: |q| - delta|p| = {excess:.3e}")
            return False
        return True

    def get_analysis_result(self) -> ConeAnalysisResult:
        return ConeAnalysisResult(
            entered=self.entered,
            entered_at=self.entered_at,
            re_exits=self.re_exits,
            max_excess=float(self.max_excess) if self.entered else float("nan"),
        )


def initial_pair(config: ExperimentConfig, model: SpectralModel, index: int, kind: str):
    cone = config.experiment.cone
    rng = experiment_rng(config, index)
    u0 = random_state(model, rng, cone.u0_ratio * model.r_cut)
    part = {"mixed": "full", "center": "center", "stable": "stable"}[kind]
    gap = random_state(model, rng, cone.gap_ratio * model.r_cut, part)
    return u0, u0 + gap


def _cone_worker(config: ExperimentConfig, model: SpectralModel, index: int) -> Dict:
    cone = config.experiment.cone
    d = config.dynamics
    kind = cone.kinds[index % len(cone.kinds)]
    t_end, dt = config.grid.t_end, config.grid.dt
    path = noise_path(config, index, d.sigma, horizon=t_end)
    z0 = z_origin(path)

    u0, u0_bar = initial_pair(config, model, index, kind)
    row = {"path": index, "kind": kind, "z0_tail_term": path.z0_tail_term}
    try:
        v = integrate_v(model, path, np.exp(-z0) * u0, t_end, dt, cutoff=True, nu=d.nu)
        v_bar = integrate_v(model, path, np.exp(-z0) * u0_bar, t_end, dt, cutoff=True, nu=d.nu)
    except BlowUpError as e:
        logger.warning(f"cone pair {index}: {e}")
        row["status"] = "failed"
        return row

    diff = v.states - v_bar.states
    p = norms(model, model.project_c(diff))
    q = norms(model, model.project_s(diff))
    forward = ForwardNoise(path, t_end, dt)
    times = forward.grid.times
    gap2 = float(norms(model, u0 - u0_bar)) ** 2
    decay = -0.5 * model.lambda_star * times + 2.0 * forward.big_z
    bound = gap2 * np.exp(decay - 2.0 * z0)
    literal = gap2 * np.exp(decay + z0)

    monitor = ConeMonitor(d.delta, cone.cone_tol)
    outside = np.zeros(len(times), dtype=bool)
    for i, t in enumerate(times):
        monitor.step(float(t), float(p[i]), float(q[i]))
        outside[i] = not monitor.entered
    result = monitor.get_analysis_result()

    q2 = q[outside] ** 2
    slack = 1.0 + 1e-9
    ratios = q2 / np.maximum(bound[outside], 1e-300)
    row.update(
        p0=float(p[0]),
        q0=float(q[0]),
        entered=result.entered,
        entered_at=result.entered_at,
        re_exits=result.re_exits,
        max_excess=result.max_excess,
        bound_ok=bool(np.all(q2 <= bound[outside] * slack)),
        bound_max_ratio=float(np.max(ratios)) if ratios.size else 0.0,
        literal_bound_ok=bool(np.all(q2 <= literal[outside] * slack)),
        status="ok",
    )
    return row


def run_cone(config: ExperimentConfig) -> ExperimentReport:
    clock = RunClock()
    model = config.build_model()
    warnings: List[str] = []
    require_conditions(config, model, ("condition2", "condition3"), warnings=warnings)

    rows = map_paths(partial(_cone_worker, config, model), range(config.monte_carlo.n_paths),
                     config.monte_carlo.threads)
    ok = [r for r in rows if r.get("status") == "ok"]
    aggregates = {
        "n_pairs": len(rows),
        "n_failed": len(rows) - len(ok),
        "n_entered": sum(1 for r in ok if r["entered"]),
        "re_exit_events": sum(r["re_exits"] for r in ok),
        "bound_fraction": fraction([r["bound_ok"] for r in ok]),
        "literal_bound_fraction": fraction([r["literal_bound_ok"] for r in ok]),
        "max_bound_ratio": max((r["bound_max_ratio"] for r in ok), default=0.0),
    }
    checks = {
        "no_re_exit": aggregates["re_exit_events"] == 0,
        "outside_decay_bound": aggregates["bound_fraction"] == 1.0,
    }
    logger.info(
        f"cone: {aggregates['n_entered']}/{len(ok)} pairs entered, {aggregates['re_exit_events']} re-exits, "
        f"decay bound on {aggregates['bound_fraction']:.3f}"
    )
    report = ExperimentReport(
        experiment="cone",
        columns=COLUMNS,
        rows=rows,
        aggregates=aggregates,
        checks=checks,
        config=config.snapshot(),
        seed_manifest=seed_manifest(config, kinds=list(config.experiment.cone.kinds)),
        warnings=warnings,
    )
    return clock.stop(report)
