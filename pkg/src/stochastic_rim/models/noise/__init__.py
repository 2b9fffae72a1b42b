from .config import NoiseConfig
from .grid import TimeGrid
from .path import (
    NoisePath,
    derive_ou,
    ou_residual,
    rescale_path,
    sample_brownian,
    sample_noise,
    shift_path,
    z0_tail_term,
    z_at_zero,
    z_origin,
)
from .functionals import KFunctionals, compute_k_functionals
from .seeding import path_seed, substream
from .storage import read_path_cache, read_path_csv, write_path_cache, write_path_csv
