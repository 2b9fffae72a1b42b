"""CSV export and a compact binary cache for noise paths."""

import csv
import struct
from pathlib import Path
from typing import Union

import numpy as np

from stochastic_rim.errors import ConfigurationError
from .grid import TimeGrid
from .path import NoisePath

CACHE_MAGIC = b"SRIMPATH"
CACHE_VERSION = 1

# version, then t_start, dt, sigma, tail_T, z0, then n_points
_HEADER = struct.Struct("<I5dQ")

PathLike = Union[str, Path]


def _nan_if_none(x):
    return float("nan") if x is None else float(x)


def write_path_csv(path: NoisePath, fpath: PathLike) -> None:
    """Columns t, w, z with round-trip float formatting."""
    z = path.z if path.z is not None else np.full_like(path.w, np.nan)
    with open(fpath, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t", "w", "z"])
        for t, w, zz in zip(path.times, path.w, z):
            writer.writerow([repr(float(t)), repr(float(w)), repr(float(zz))])


def read_path_csv(fpath: PathLike, sigma=None) -> NoisePath:
    data = np.loadtxt(fpath, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] < 2 or data.shape[1] != 3:
        raise ConfigurationError(f"{fpath}: expected columns t,w,z with at least two rows")
    t, w, z = data.T
    dt = float(t[1] - t[0])
    grid = TimeGrid(float(t[0]), float(t[-1]), dt, len(t) - 1)
    z_arr = None if np.all(np.isnan(z)) else z
    return NoisePath(grid=grid, w=w, z=z_arr, sigma=sigma, tail_T=-grid.t_start)


def write_path_cache(path: NoisePath, fpath: PathLike) -> None:
    g = path.grid
    n = g.n_steps + 1
    z = path.z if path.z is not None else np.full(n, np.nan)
    header = _HEADER.pack(
        CACHE_VERSION, g.t_start, g.dt, _nan_if_none(path.sigma), path.tail_T, _nan_if_none(path.z0), n
    )
    with open(fpath, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(header)
        f.write(np.ascontiguousarray(path.w, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(z, dtype="<f8").tobytes())


def read_path_cache(fpath: PathLike) -> NoisePath:
    raw = Path(fpath).read_bytes()
    if raw[: len(CACHE_MAGIC)] != CACHE_MAGIC:
        raise ConfigurationError(f"{fpath}: not a noise path cache")
    off = len(CACHE_MAGIC)
    version, t_start, dt, sigma, tail_T, z0, n = _HEADER.unpack_from(raw, off)
    if version != CACHE_VERSION:
        raise ConfigurationError(f"{fpath}: unsupported cache version {version}")
    off += _HEADER.size
    arrays = np.frombuffer(raw, dtype="<f8", count=2 * n, offset=off)
    w, z = arrays[:n].copy(), arrays[n:].copy()
    offset = int(round(t_start / dt))
    grid = TimeGrid(offset * dt, (offset + n - 1) * dt, dt, n - 1)
    return NoisePath(
        grid=grid,
        w=w,
        z=None if np.all(np.isnan(z)) else z,
        sigma=None if np.isnan(sigma) else sigma,
        z0=None if np.isnan(z0) else z0,
        tail_T=tail_T,
    )
