"""
Constant and rate fits shared by the experiments.

The bounds under test carry existential constants, so each experiment fits
one constant on a calibration subset of paths and validates the functional
form on the remaining paths.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress


def calibration_count(n_paths: int, fraction: float) -> int:
    """Number of leading path indices used for calibration (at least one)."""
    return max(1, int(math.ceil(fraction * n_paths)))


def is_calibration(path_index: int, n_paths: int, fraction: float) -> bool:
    return path_index < calibration_count(n_paths, fraction)


def calibrate_constant(lhs: Sequence[float], envelope: Sequence[float]) -> float:
    """Smallest C with lhs <= C * envelope on every row with a positive envelope."""
    lhs = np.asarray(lhs, dtype=np.float64)
    env = np.asarray(envelope, dtype=np.float64)
    mask = env > 0.0
    if not np.any(mask):
        return 0.0
    return float(np.max(lhs[mask] / env[mask]))


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x over the positive pairs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mask = (x > 0.0) & (y > 0.0) & np.isfinite(y)
    if np.count_nonzero(mask) < 2:
        return float("nan")
    return float(linregress(np.log(x[mask]), np.log(y[mask])).slope)


def decay_rate(
    t: Sequence[float],
    values: Sequence[float],
    floor: float = 0.0,
    min_points: int = 3,
) -> Optional[float]:
    """
    Exponential decay rate r of values ~ c e^{-r t}, fitted on log values above
    ``floor``. Returns None when fewer than ``min_points`` points qualify.
    """
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    mask = (v > floor) & np.isfinite(v)
    if np.count_nonzero(mask) < max(min_points, 2):
        return None
    return float(-linregress(t[mask], np.log(v[mask])).slope)


def fraction(flags: Sequence[bool]) -> float:
    flags = np.asarray(flags, dtype=bool)
    return float(np.mean(flags)) if flags.size else float("nan")


def is_non_increasing(values: Sequence[float], slack: float = 0.0) -> bool:
    v = [x for x in values if not math.isnan(x)]
    return all(b <= a + slack for a, b in zip(v, v[1:]))
