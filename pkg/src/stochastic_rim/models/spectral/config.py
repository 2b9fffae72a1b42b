import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from omegaconf import OmegaConf

from stochastic_rim.errors import ConfigurationError
from .model import SpectralModel, build_burgers

logger = logging.getLogger(__name__)


class SpectralConfig:
    def __init__(
        self,
        kind: str = "burgers",
        n_total: int = 16,
        r_cut: float = 0.05,
        alpha: float = 0.75,
        eigenvalues: Optional[Sequence[float]] = None,
        n_c: int = 1,
    ):
        self.kind = kind
        self.n_total = n_total
        self.r_cut = r_cut
        self.alpha = alpha
        self.eigenvalues = list(eigenvalues) if eigenvalues is not None else None
        self.n_c = n_c

    @classmethod
    def burgers(cls, n_total: int = 16, r_cut: float = 0.05, alpha: float = 0.75):
        """Burgers truncation; R=0.05 satisfies all three conditions at n_total=16."""
        return cls("burgers", n_total, r_cut, alpha)

    @classmethod
    def linear(cls, eigenvalues: Sequence[float], n_c: int = 1, alpha: float = 0.75):
        """Diagonal linear model with B = 0, used for closed-form checks."""
        return cls("linear", len(eigenvalues), 0.0, alpha, eigenvalues, n_c)

    def build(self) -> SpectralModel:
        if self.kind == "burgers":
            return build_burgers(self.n_total, self.r_cut, self.alpha)
        if self.kind == "linear":
            if self.eigenvalues is None:
                raise ConfigurationError("linear model needs eigenvalues")
            n = len(self.eigenvalues)
            return SpectralModel.from_arrays(
                self.eigenvalues, np.zeros((n, n, n)), self.n_c, self.alpha, self.r_cut, name="linear"
            )
        raise ConfigurationError(f"unknown model kind {self.kind!r}")


def load_model_config(fpath: Union[str, Path]) -> SpectralModel:
    """Build a model from a YAML file with keys kind, n_total, r_cut, alpha[, eigenvalues, n_c]."""
    try:
        cfg = OmegaConf.to_container(OmegaConf.load(fpath), resolve=True)
    except Exception as e:
        raise ConfigurationError(f"cannot read model config {fpath}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{fpath}: expected a mapping")
    known = {"kind", "n_total", "r_cut", "alpha", "eigenvalues", "n_c"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigurationError(f"{fpath}: unknown keys {sorted(unknown)}")
    return SpectralConfig(**cfg).build()


def dump_tensor_csv(model: SpectralModel, fpath: Union[str, Path]) -> int:
    """Write the non-zero entries of b_tensor as j,k,l,value (1-based). Returns the row count."""
    idx = np.argwhere(model.b_tensor != 0.0)
    with open(fpath, "w") as f:
        f.write("j,k,l,value\n")
        for j, k, l in idx:
            f.write(f"{j + 1},{k + 1},{l + 1},{float(model.b_tensor[j, k, l])!r}\n")
    logger.debug(f"Wrote {len(idx)} tensor entries to {fpath}")
    return len(idx)
