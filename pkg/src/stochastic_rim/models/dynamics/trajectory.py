import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Literal, Optional, Sequence, Union

import numpy as np

from stochastic_rim.errors import ConfigurationError, NoiseRangeError
from stochastic_rim.models.noise import NoisePath, TimeGrid
from stochastic_rim.models.spectral import SpectralModel, norms

Representation = Literal["v", "u", "amplitude"]


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    # Shape (n_nodes, dim)
    states: np.ndarray
    representation: Representation = "v"

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def norms(self, model: SpectralModel) -> np.ndarray:
        return norms(model, self.states)

    def write_csv(
        self,
        fpath: Union[str, Path],
        model: Optional[SpectralModel] = None,
        extra: Optional[Dict[str, Sequence[float]]] = None,
    ) -> None:
        """t, one column per coefficient, |state| when a model is given, then extra columns."""
        extra = extra or {}
        dim = self.states.shape[1]
        header = ["t"] + [f"a{k + 1}" for k in range(dim)]
        if model is not None:
            header.append(f"norm_{self.representation}")
            state_norms = self.norms(model)
        header += list(extra)
        with open(fpath, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for i, t in enumerate(self.times):
                row = [repr(float(t))] + [repr(float(x)) for x in self.states[i]]
                if model is not None:
                    row.append(repr(float(state_norms[i])))
                row += [repr(float(col[i])) for col in extra.values()]
                writer.writerow(row)


def z_at(path: NoisePath, times: np.ndarray) -> np.ndarray:
    """OU values of ``path`` at grid times."""
    if path.z is None:
        raise ConfigurationError("noise path has no OU component")
    k = (np.asarray(times) - path.grid.t_start) / path.dt
    idx = np.rint(k).astype(int)
    if np.any(np.abs(k - idx) > 1e-6):
        raise ConfigurationError("trajectory times are not nodes of the noise grid")
    if np.any(idx < 0) or np.any(idx > path.grid.n_steps):
        raise NoiseRangeError("trajectory extends beyond the stored noise path")
    return path.z[idx]


def to_u(trajectory: Trajectory, path: NoisePath) -> Trajectory:
    """u = e^{z(t)} v nodewise."""
    if trajectory.representation != "v":
        raise ConfigurationError(f"expected a v-trajectory, got {trajectory.representation!r}")
    scale = np.exp(z_at(path, trajectory.times))[:, None]
    return replace(trajectory, states=trajectory.states * scale, representation="u")


def to_v(trajectory: Trajectory, path: NoisePath) -> Trajectory:
    """v = e^{-z(t)} u nodewise."""
    if trajectory.representation != "u":
        raise ConfigurationError(f"expected a u-trajectory, got {trajectory.representation!r}")
    scale = np.exp(-z_at(path, trajectory.times))[:, None]
    return replace(trajectory, states=trajectory.states * scale, representation="v")
