from pathlib import Path

import numpy as np
import pytest

from stochastic_rim.models.manifold import PerronConfig
from stochastic_rim.models.noise import NoiseConfig, sample_noise
from stochastic_rim.models.spectral import SpectralModel, build_burgers

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session")
def burgers() -> SpectralModel:
    return build_burgers(8, R=0.05)


@pytest.fixture(scope="session")
def burgers16() -> SpectralModel:
    return build_burgers(16, R=0.05)


@pytest.fixture(scope="session")
def perron_config() -> PerronConfig:
    return PerronConfig(window=20.0, stride=4, tol=1e-11)


def short_noise(sigma: float, seed: int = 7, horizon: float = 1.0, dt: float = 0.01, tail: float = 50.0):
    return sample_noise(sigma, seed, NoiseConfig(dt=dt, tail=tail, horizon=horizon))


@pytest.fixture(scope="session")
def noisy_path():
    return short_noise(0.01)


@pytest.fixture(scope="session")
def quiet_path():
    return short_noise(1e-6, horizon=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(1))
