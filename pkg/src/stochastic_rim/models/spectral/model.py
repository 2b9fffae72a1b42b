"""
Spectral Galerkin model of an SPDE with a symmetric quadratic nonlinearity

    du = (-L u + nu u + B(u, u)) dt + sigma u o dW

truncated to the first n_total eigenmodes of L. The first n_c modes span the
center space H_c (eigenvalue 0), the remaining ones the stable space H_s.
States are coefficient vectors; inner products carry the basis
normalisation ``inner_scale`` (pi/2 for the sine basis on (0, pi)).
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from stochastic_rim.errors import ConfigurationError, DomainError
from .cutoff import cutoff_profile

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralModel:
    # Eigenvalues of L, ascending; the first n_c are zero
    lam: np.ndarray

    # b_tensor[j, k, l] = coefficient of e_l in B(e_j, e_k), symmetric in (j, k)
    b_tensor: np.ndarray

    n_c: int
    alpha: float
    r_cut: float
    inner_scale: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        n = len(self.lam)
        if self.b_tensor.shape != (n, n, n):
            raise ConfigurationError(f"b_tensor shape {self.b_tensor.shape} does not match {n} modes")
        if not (1 <= self.n_c < n):
            raise ConfigurationError(f"need 1 <= n_c < n_total, got n_c={self.n_c}, n_total={n}")
        if not np.allclose(self.lam[: self.n_c], 0.0):
            raise ConfigurationError("center eigenvalues must be zero")
        if np.any(self.lam[self.n_c:] <= 0) or np.any(np.diff(self.lam) < 0):
            raise ConfigurationError("stable eigenvalues must be positive and ascending")
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigurationError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.r_cut < 0:
            raise ConfigurationError(f"R must be >= 0, got {self.r_cut}")

    @classmethod
    def from_arrays(
        cls,
        lam,
        b_tensor,
        n_c: int,
        alpha: float,
        r_cut: float,
        inner_scale: float = 1.0,
        name: str = "custom",
    ) -> "SpectralModel":
        return cls(
            lam=np.asarray(lam, dtype=np.float64),
            b_tensor=np.asarray(b_tensor, dtype=np.float64),
            n_c=int(n_c),
            alpha=float(alpha),
            r_cut=float(r_cut),
            inner_scale=float(inner_scale),
            name=name,
        )

    @property
    def n_total(self) -> int:
        return len(self.lam)

    @property
    def lambda_star(self) -> float:
        return float(self.lam[self.n_c])

    @property
    def lam_s(self) -> np.ndarray:
        return self.lam[self.n_c:]

    @property
    def c_alpha(self) -> float:
        # |P_c u| <= C_alpha |u|_{-alpha}; lam_c = 0 gives weight 1
        return 1.0

    @cached_property
    def c_b(self) -> float:
        return compute_cb(self)

    @property
    def l_r(self) -> float:
        return 2.0 * self.r_cut * self.c_b

    def with_radius(self, r_cut: float) -> "SpectralModel":
        return SpectralModel.from_arrays(
            self.lam, self.b_tensor, self.n_c, self.alpha, r_cut, self.inner_scale, self.name
        )

    def project_c(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        out[..., : self.n_c] = u[..., : self.n_c]
        return out

    def project_s(self, u: np.ndarray) -> np.ndarray:
        out = np.array(u, dtype=np.float64, copy=True)
        out[..., : self.n_c] = 0.0
        return out

    def basis_vector(self, k: int, amplitude: float = 1.0) -> np.ndarray:
        """amplitude * e_k with k counted from 1."""
        u = np.zeros(self.n_total)
        u[k - 1] = amplitude
        return u


def build_burgers(n_total: int = 16, R: float = 0.05, alpha: float = 0.75) -> SpectralModel:
    """
    Stochastic Burgers u_t = u_xx + u + u u_x on (0, pi) with Dirichlet data,
    basis sin(kx): lam_k = k^2 - 1 and

        B(sin jx, sin kx) = 1/4 [(j+k) sin((j+k)x) - |j-k| sin(|j-k|x)].
    """
    if n_total < 3:
        raise ConfigurationError(f"Burgers truncation needs n_total >= 3, got {n_total}")
    k = np.arange(1, n_total + 1)
    lam = (k * k - 1).astype(np.float64)
    b = np.zeros((n_total, n_total, n_total))
    for j in range(1, n_total + 1):
        for kk in range(1, n_total + 1):
            s = j + kk
            if s <= n_total:
                b[j - 1, kk - 1, s - 1] += 0.25 * s
            d = abs(j - kk)
            if d >= 1:
                b[j - 1, kk - 1, d - 1] -= 0.25 * d
    return SpectralModel.from_arrays(lam, b, 1, alpha, R, np.pi / 2.0, name="burgers")


def apply_b(model: SpectralModel, u: np.ndarray, v: Optional[np.ndarray] = None) -> np.ndarray:
    """Truncated bilinear form, vectorised over leading axes of u and v."""
    u = np.asarray(u, dtype=np.float64)
    v = u if v is None else np.asarray(v, dtype=np.float64)
    if u.shape[-1] != model.n_total or v.shape[-1] != model.n_total:
        raise DomainError(f"state dimension must be {model.n_total}")
    return np.einsum("...j,...k,jkl->...l", u, v, model.b_tensor, optimize=True)


def norms(model: SpectralModel, u: np.ndarray, order: float = 0.0) -> np.ndarray:
    """Norm with squared-coefficient weights inner_scale * (1 + lam_k)^order."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] != model.n_total:
        raise DomainError(f"state dimension must be {model.n_total}")
    weights = model.inner_scale * (1.0 + model.lam) ** order
    return np.sqrt(np.sum(weights * u * u, axis=-1))


def apply_b_cutoff(model: SpectralModel, u: np.ndarray) -> np.ndarray:
    """B^(R)(u) = chi(|u| / R) B(u, u)."""
    u = np.asarray(u, dtype=np.float64)
    chi = cutoff_profile(norms(model, u), model.r_cut)
    return np.asarray(chi)[..., None] * apply_b(model, u)


def ls_inverse_bs(model: SpectralModel, xi: np.ndarray) -> np.ndarray:
    """L_s^{-1} P_s B(xi, xi), the quadratic leading term of the manifold."""
    w = apply_b(model, xi)
    out = np.zeros_like(w)
    out[..., model.n_c:] = w[..., model.n_c:] / model.lam_s
    return out


def energy_residual(model: SpectralModel, u: np.ndarray) -> float:
    """<B(u, u), u>, zero for energy-conserving nonlinearities."""
    return float(model.inner_scale * np.dot(apply_b(model, u), u))


def compute_cb(model: SpectralModel, n_starts: int = 8, tol: float = 1e-12, max_iter: int = 500, seed: int = 0) -> float:
    """
    C_B = sup |B(u, v)|_{-alpha} / (|u| |v|), by alternating maximisation:
    with v fixed, u -> B(u, v) is linear and its top singular pair gives the
    best u, and vice versa. Several random starts guard against local maxima.
    """
    weight = (1.0 + model.lam) ** (-model.alpha / 2.0)
    tensor = model.b_tensor * weight[None, None, :]
    rng = np.random.Generator(np.random.Philox(seed))
    n = model.n_total

    best = 0.0
    starts = [np.eye(n)[0]] + [rng.standard_normal(n) for _ in range(n_starts - 1)]
    for v in starts:
        v = v / np.linalg.norm(v)
        value = 0.0
        for _ in range(max_iter):
            _, s_u, vt_u = np.linalg.svd(np.einsum("jkl,k->lj", tensor, v))
            u = vt_u[0]
            _, s_v, vt_v = np.linalg.svd(np.einsum("jkl,j->lk", tensor, u))
            v = vt_v[0]
            new_value = float(s_v[0])
            if abs(new_value - value) <= tol * max(new_value, 1.0):
                value = new_value
                break
            value = new_value
        best = max(best, value)

    # |u| = sqrt(scale) |u|_2 in both factors and in the numerator
    c_b = best / np.sqrt(model.inner_scale)
    logger.debug(f"C_B={c_b:.6g} for {model.name} (n={n}, alpha={model.alpha})")
    return c_b


def compute_m_alpha_lambda(model: SpectralModel, lam: float) -> float:
    """
    M_{alpha,lambda} = max_k sup_t exp(-(lam_k - lam) t) (1 + lam_k)^{alpha/2} t^alpha
    over stable modes, attained at t* = alpha / (lam_k - lam).
    """
    if lam >= model.lambda_star:
        raise DomainError(f"lambda={lam} must be below lambda*={model.lambda_star}")
    a = model.alpha
    gap = model.lam_s - lam
    per_mode = (a / np.e) ** a * gap ** (-a) * (1.0 + model.lam_s) ** (a / 2.0) if a > 0 else np.ones_like(gap)
    return float(np.max(per_mode))


def brute_force_b(u: np.ndarray, v: np.ndarray, n_quad: int = 256) -> np.ndarray:
    """
    Sine coefficients of 1/2 d/dx (u v) by Gauss-Legendre quadrature on (0, pi),
    truncated to len(u) modes. Reference for the Burgers tensor.
    """
    n = len(u)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * np.pi * (nodes + 1.0)
    wq = 0.5 * np.pi * weights
    k = np.arange(1, n + 1)
    sin_kx = np.sin(np.outer(x, k))
    cos_kx = np.cos(np.outer(x, k))
    uf, vf = sin_kx @ u, sin_kx @ v
    du, dv = cos_kx @ (k * u), cos_kx @ (k * v)
    f = 0.5 * (du * vf + uf * dv)
    return (2.0 / np.pi) * (sin_kx * (wq * f)[:, None]).sum(axis=0)
