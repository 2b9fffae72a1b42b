import numpy as np


def _smoothstep(s: np.ndarray) -> np.ndarray:
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)


def cutoff_profile(r, r_cut: float):
    """
    C^2 cut-off: 1 on [0, R], 0 on [2R, inf), quintic smoothstep in between.
    """
    if r_cut <= 0:
        return np.zeros_like(np.asarray(r, dtype=np.float64))
    s = np.clip(np.asarray(r, dtype=np.float64) / r_cut - 1.0, 0.0, 1.0)
    return 1.0 - _smoothstep(s)


def cutoff_slope(s):
    """d chi / d s on the transition layer, s = r/R - 1 in [0, 1]."""
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
    return -30.0 * s * s * (1.0 - s) ** 2


def cutoff_lipschitz_factor(n_grid: int = 4001) -> float:
    """
    Ratio of the global Lipschitz bound of chi(|u|) B(u, u) to 2 R C_B.

    With r = R(1 + s) the derivative is bounded by
    C_B R (|chi'(s)| (1+s)^2 + 2 chi(s) (1+s)); inside the ball this is 2 R C_B.
    """
    s = np.linspace(0.0, 1.0, n_grid)
    chi = 1.0 - _smoothstep(s)
    bound = np.abs(cutoff_slope(s)) * (1.0 + s) ** 2 + 2.0 * chi * (1.0 + s)
    return float(max(1.0, np.max(bound) / 2.0))
