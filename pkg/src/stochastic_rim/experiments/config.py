"""
Experiment configuration.

A run is described by one YAML file whose sections mirror ExperimentConfig.
The file is read with omegaconf (so ``${...}`` interpolation works) and then
validated by pydantic with unknown keys rejected.
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from omegaconf import OmegaConf
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from stochastic_rim.errors import ConfigurationError
from stochastic_rim.models.manifold import PerronConfig
from stochastic_rim.models.spectral import SpectralConfig, SpectralModel

logger = logging.getLogger(__name__)

ENV_PREFIX = "STOCHASTIC_RIM_"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    kind: Literal["burgers", "linear"] = Field(default="burgers", description="Spectral model family")
    n_total: int = Field(default=16, ge=3, description="Number of Galerkin modes")
    r_cut: float = Field(default=0.05, ge=0.0, description="Cut-off radius R")
    alpha: float = Field(default=0.75, ge=0.0, lt=1.0, description="Interpolation exponent")
    eigenvalues: Optional[List[float]] = Field(default=None, description="Spectrum of the linear model")
    n_c: int = Field(default=1, ge=1, description="Center-space dimension of the linear model")

    def build(self) -> SpectralModel:
        if self.kind == "linear":
            if not self.eigenvalues:
                raise ConfigurationError("model.kind=linear needs model.eigenvalues")
            return SpectralConfig.linear(self.eigenvalues, self.n_c, self.alpha).build()
        return SpectralConfig.burgers(self.n_total, self.r_cut, self.alpha).build()


class DynamicsSection(_Section):
    nu: float = Field(default=0.0, description="Linear instability parameter")
    sigma: float = Field(default=0.01, ge=0.0, description="Noise intensity")
    eta: float = Field(default=1.0, description="History weight exponent")
    delta: float = Field(default=1.0, gt=0.0, description="Cone aperture")
    lam: float = Field(default=2.5, description="Spectral-gap parameter, eta + nu < lam < lambda*")


class GridSection(_Section):
    dt: float = Field(default=0.005, gt=0.0, description="Noise and integration step")
    tail: float = Field(default=50.0, ge=0.0, description="Stored noise history before t=0")
    window: float = Field(default=40.0, gt=0.0, description="Lyapunov-Perron history window")
    history_stride: int = Field(default=2, ge=1, description="Noise steps per history node")
    t_end: float = Field(default=3.0, gt=0.0, description="Forward horizon")
    ou_mode: Literal["stationary", "zero_tail"] = "zero_tail"


class MonteCarloSection(_Section):
    n_paths: int = Field(default=200, ge=1)
    master_seed: int = Field(default=20240917, ge=0)
    threads: Optional[int] = Field(default=None, ge=1, description="Worker cap, default all cores")
    calibration_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)


class PerronSection(_Section):
    tol: float = Field(default=1e-12, gt=0.0)
    max_iter: int = Field(default=200, ge=1)
    psi_nodes: int = Field(default=65, ge=4)
    h_refresh: float = Field(default=0.25, gt=0.0)
    strict: bool = Field(default=True, description="Refuse runs whose contraction condition fails")


class ShapeSection(_Section):
    sigma_sweep: List[float] = Field(default_factory=lambda: [0.04, 0.01, 0.0025])
    nu_ratio: float = Field(default=0.5, description="nu = nu_ratio * sigma")
    xi_max_ratio: float = Field(default=0.5, gt=0.0, le=0.5, description="largest |xi| as a fraction of R")
    n_xi: int = Field(default=6, ge=2)
    run_limit: bool = True
    limit_sigma: float = Field(default=1e-6, gt=0.0)
    limit_xi: List[float] = Field(default_factory=lambda: [0.005, 0.05])
    limit_points: int = Field(default=6, ge=3)


class AttractionSection(_Section):
    sample_every: float = Field(default=0.25, gt=0.0)
    u0_ratio: float = Field(default=0.5, gt=0.0, lt=1.0, description="|u0| as a fraction of R")
    distance_floor: float = Field(default=1e-7, gt=0.0)
    min_fit_points: int = Field(default=3, ge=2)
    psi_nodes: int = Field(default=17, ge=4)
    on_manifold: bool = False


class ConeSection(_Section):
    u0_ratio: float = Field(default=0.5, gt=0.0, lt=1.0)
    gap_ratio: float = Field(default=0.1, gt=0.0)
    cone_tol: float = Field(default=1e-8, ge=0.0)
    kinds: List[Literal["mixed", "center", "stable"]] = Field(default_factory=lambda: ["mixed", "center", "stable"])


class KTailSection(_Section):
    bridge: bool = Field(default=True, description="Refine K~ with Brownian-bridge maxima")


class AmplitudeSection(_Section):
    eps_sweep: List[float] = Field(default_factory=lambda: [0.2, 0.1])
    nu0: float = 1.0
    a0: float = 0.5
    amplitude_dt: float = Field(default=0.001, gt=0.0)
    tolerance_factor: float = Field(default=2.0, gt=0.0, description="error tolerance = factor * eps^2")
    tail: float = Field(default=20.0, ge=0.0)


class GChainSection(_Section):
    r_sweep: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2])
    xi_ratio: float = Field(default=0.5, gt=0.0, le=1.0)


class ContractionSection(_Section):
    n_pairs: int = Field(default=8, ge=1)
    xi_ratios: List[float] = Field(default_factory=lambda: [0.25, 0.5])
    perturbation: float = Field(default=0.1, gt=0.0)


class SimulateSection(_Section):
    u0: List[float] = Field(default_factory=lambda: [0.02, 0.005])
    cutoff: bool = True
    reduced: Optional[Literal["quadratic", "exact-LP"]] = None
    amplitude: bool = False
    compare_cutoff: bool = False
    path_index: int = Field(default=0, ge=0)


class ExperimentSection(_Section):
    shape: ShapeSection = Field(default_factory=ShapeSection)
    attraction: AttractionSection = Field(default_factory=AttractionSection)
    cone: ConeSection = Field(default_factory=ConeSection)
    ktail: KTailSection = Field(default_factory=KTailSection)
    amplitude: AmplitudeSection = Field(default_factory=AmplitudeSection)
    gchain: GChainSection = Field(default_factory=GChainSection)
    contraction: ContractionSection = Field(default_factory=ContractionSection)
    simulate: SimulateSection = Field(default_factory=SimulateSection)


class AcceptanceSection(_Section):
    shape_fraction: float = 0.99
    limit_slope: float = 3.0
    slope_tol: float = 0.3
    attraction_bound_fraction: float = 0.95
    attraction_rate_fraction: float = 0.90
    ks_max: float = 0.05
    amplitude_fraction: float = 0.90
    residual_ratio_slack: float = 1.05


class ExperimentConfig(_Section):
    name: str = "default"
    model: ModelSection = Field(default_factory=ModelSection)
    dynamics: DynamicsSection = Field(default_factory=DynamicsSection)
    grid: GridSection = Field(default_factory=GridSection)
    monte_carlo: MonteCarloSection = Field(default_factory=MonteCarloSection)
    perron: PerronSection = Field(default_factory=PerronSection)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    acceptance: AcceptanceSection = Field(default_factory=AcceptanceSection)

    @model_validator(mode="after")
    def _check_grid(self):
        if self.grid.window > self.grid.tail:
            raise ValueError(f"grid.window={self.grid.window} exceeds stored tail grid.tail={self.grid.tail}")
        return self

    def build_model(self) -> SpectralModel:
        return self.model.build()

    def perron_config(self, **overrides) -> PerronConfig:
        d = self.dynamics
        p = self.perron
        return PerronConfig(
            nu=overrides.get("nu", d.nu),
            eta=d.eta,
            lam=d.lam,
            delta=d.delta,
            window=self.grid.window,
            stride=self.grid.history_stride,
            tol=p.tol,
            max_iter=p.max_iter,
            psi_nodes=overrides.get("psi_nodes", p.psi_nodes),
            strict=p.strict,
        )

    def with_overrides(
        self,
        seed: Optional[int] = None,
        n_paths: Optional[int] = None,
        threads: Optional[int] = None,
    ) -> "ExperimentConfig":
        updates = {
            k: v
            for k, v in {"master_seed": seed, "n_paths": n_paths, "threads": threads}.items()
            if v is not None
        }
        data = self.snapshot()
        data["monte_carlo"] = {**data["monte_carlo"], **updates}
        return config_from_mapping(data)

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def content_hash(self) -> str:
        """sha256 of the canonical JSON snapshot."""
        canonical = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def config_from_mapping(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid experiment config:\n{e}") from e


def load_experiment_config(fpath: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Load and validate a YAML config; ``None`` gives the built-in defaults."""
    if fpath is None:
        return ExperimentConfig()
    fpath = Path(fpath)
    if not fpath.is_file():
        raise ConfigurationError(f"config file not found: {fpath}")
    try:
        raw = OmegaConf.to_container(OmegaConf.load(fpath), resolve=True)
    except Exception as e:
        raise ConfigurationError(f"cannot parse {fpath}: {e}") from e
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{fpath}: top level must be a mapping")
    logger.debug(f"Loaded config {fpath}")
    return config_from_mapping(raw)


def env_default(name: str, default: Optional[str] = None) -> Optional[str]:
    """Environment setting with the project prefix, e.g. STOCHASTIC_RIM_OUT_DIR."""
    return os.environ.get(ENV_PREFIX + name, default)
