import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from stochastic_rim.errors import ConfigurationError
from stochastic_rim.models.noise import NoiseConfig, NoisePath, path_seed, sample_noise, substream
from stochastic_rim.models.noise.seeding import STREAM_EXPERIMENT
from stochastic_rim.models.spectral import ConditionReport, SpectralModel, check_conditions, norms
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

ALL_CONDITIONS = ("condition1", "condition2", "condition3")


def require_conditions(
    config: ExperimentConfig,
    model: SpectralModel,
    which: Sequence[str] = ALL_CONDITIONS,
    nu: Optional[float] = None,
    warnings: Optional[List[str]] = None,
) -> ConditionReport:
    """
    Evaluate the admissibility conditions; failures of the ones in ``which``
    raise ConfigurationError when perron.strict is set and are otherwise
    recorded in ``warnings``.
    """
    d = config.dynamics
    report = check_conditions(model, d.nu if nu is None else nu, d.eta, d.delta, d.lam)
    failed = [name for name in which if not getattr(report, name)]
    if failed:
        msg = (
            f"{', '.join(failed)} violated at R={model.r_cut} (contraction bound "
            f"{report.contraction_bound:.4g}, lambda*={model.lambda_star})"
        )
        if config.perron.strict:
            raise ConfigurationError(msg + "; set perron.strict=false to run with measured contraction")
        logger.warning(msg)
        if warnings is not None:
            warnings.append(msg)
    return report


def noise_path(
    config: ExperimentConfig,
    index: int,
    sigma: float,
    horizon: float = 0.0,
    tail: Optional[float] = None,
    dt: Optional[float] = None,
) -> NoisePath:
    """Brownian path ``index`` of the run with its OU process attached."""
    noise = NoiseConfig(
        dt=config.grid.dt if dt is None else dt,
        tail=config.grid.tail if tail is None else tail,
        horizon=horizon,
        ou_mode=config.grid.ou_mode,
    )
    return sample_noise(sigma, path_seed(config.monte_carlo.master_seed, index), noise)


def experiment_rng(config: ExperimentConfig, index: int) -> np.random.Generator:
    """Per-path generator for experiment-level draws such as initial data."""
    return substream(path_seed(config.monte_carlo.master_seed, index), STREAM_EXPERIMENT)


def random_state(model: SpectralModel, rng: np.random.Generator, size: float, part: str = "full") -> np.ndarray:
    """Random direction with |u| = size, supported on H_c, H_s or both."""
    u = rng.standard_normal(model.n_total)
    if part == "center":
        u = model.project_c(u)
    elif part == "stable":
        u = model.project_s(u)
    elif part != "full":
        raise ConfigurationError(f"unknown state part {part!r}")
    n = float(norms(model, u))
    if n == 0.0:
        return u
    return u * (size / n)


def split_rows(rows: List[dict], key: str = "in_hypothesis") -> Tuple[List[dict], int]:
    """In-hypothesis rows and the count of the others."""
    inside = [r for r in rows if r.get(key, True)]
    return inside, len(rows) - len(inside)
