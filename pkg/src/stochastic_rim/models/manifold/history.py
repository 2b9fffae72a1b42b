from dataclasses import dataclass
from typing import Optional

import numpy as np

from stochastic_rim.models.noise import NoisePath, TimeGrid
from stochastic_rim.models.spectral import SpectralModel, norms


@dataclass(eq=False)
class HistoryFunction:
    """A function v: [-T, 0] -> H sampled on the history grid."""

    grid: TimeGrid
    # Shape (n_nodes, n_total)
    values: np.ndarray
    eta: float
    path: Optional[NoisePath] = None
    # eta * t_i - int_0^{t_i} z, the log of the C_eta^- weight
    log_weight: Optional[np.ndarray] = None

    def norm(self, model: SpectralModel) -> float:
        """max_i e^{eta t_i - int_0^{t_i} z} |v(t_i)|"""
        return weighted_sup(model, self.values, self.log_weight)

    def at_zero(self) -> np.ndarray:
        return self.values[-1]

    def like(self, values: np.ndarray) -> "HistoryFunction":
        return HistoryFunction(self.grid, values, self.eta, self.path, self.log_weight)


def weighted_sup(model: SpectralModel, values: np.ndarray, log_weight: Optional[np.ndarray]) -> float:
    n = norms(model, values)
    if log_weight is None:
        return float(np.max(n))
    return float(np.max(np.exp(log_weight) * n))
