"""
Diagnostic chain between h(w, xi) and its quadratic prediction.

    g1(t) = int_{-inf}^t e^{(-L_s+nu)(t-s) + Z(t)-Z(s)} chi*(s) B_s(v*_c, v*_c)(s) e^{z(s)} ds
    g2    = int_{-inf}^0 e^{L_s s} chi*(s) B_s(xi, v*_c(s)) e^{z(s)} ds
    g3    = int_{-inf}^0 e^{L_s s} chi*(s) e^{z(s) + nu s + Z(s)} ds  B_s(xi, xi)
    g4    = int_{-inf}^0 e^{L_s s} e^{z(s) + nu s + Z(s)} ds  B_s(xi, xi)

with chi*(s) = chi_R(|v*(s) e^{z(s)}|). Since z(s) + Z(s) = z(0) + sigma w(s),
g4 -> e^{z(0)} L_s^{-1} B_s(xi, xi) as sigma -> 0.
"""

from dataclasses import dataclass

import numpy as np

from stochastic_rim.models.spectral import apply_b, norms
from .solver import ManifoldSample


@dataclass(eq=False)
class GChain:
    g1: np.ndarray
    g1_zero: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g4: np.ndarray
    prediction: np.ndarray

    # |v*_s(0) - g1(0)|
    som2: float
    g1_g2: float
    g2_g3: float
    # |g3 - g4|: removing the cut-off
    cut2: float
    # |g4 - e^{z(0)} L_s^{-1} B_s(xi, xi)|: removing the noise
    cut3: float
    # |g3 - e^{z(0)} L_s^{-1} B_s(xi, xi)|
    g3_pred: float

    # History norms |v*_s| and |v*_s - g1| in C_eta^-
    vs_norm: float
    vs_g1_norm: float

    @property
    def stage_errors(self) -> tuple:
        return (self.som2, self.g1_g2, self.g2_g3, self.g3_pred)

    def to_dict(self) -> dict:
        return {
            "som2": self.som2,
            "g1_g2": self.g1_g2,
            "g2_g3": self.g2_g3,
            "cut2": self.cut2,
            "cut3": self.cut3,
            "g3_pred": self.g3_pred,
            "vs_norm": self.vs_norm,
            "vs_g1_norm": self.vs_g1_norm,
        }


def _embed(model, stable: np.ndarray) -> np.ndarray:
    out = np.zeros(model.n_total)
    out[model.n_c:] = stable
    return out


def compute_g_chain(sample: ManifoldSample) -> GChain:
    op = sample.operator
    model = op.model
    nc = model.n_c
    v = sample.v_star.values
    xi = sample.xi

    v_c = np.zeros_like(v)
    v_c[:, :nc] = v[:, :nc]
    chi = op.chi(v)
    ez = np.exp(op.z_nodes)

    a1 = (chi * ez)[:, None] * apply_b(model, v_c)
    g1 = model.project_s(op.stable_integral(a1))

    f2 = (chi * ez)[:, None] * apply_b(model, np.broadcast_to(xi, v_c.shape), v_c)
    g2 = _embed(model, op.backward_integral(f2[:, nc:]))

    b_xi = apply_b(model, xi)[nc:]
    growth = np.exp(op.z_nodes + op.config.nu * op.times + op.big_z)
    g3 = _embed(model, op.backward_integral(np.outer(chi * growth, np.ones(len(b_xi)))) * b_xi)
    g4 = _embed(model, op.backward_integral(np.outer(growth, np.ones(len(b_xi)))) * b_xi)
    pred = _embed(model, np.exp(op.z0) * b_xi / model.lam_s)

    v_s = model.project_s(v)

    def n(u):
        return float(norms(model, u))

    chain = GChain(
        g1=g1,
        g1_zero=g1[-1],
        g2=g2,
        g3=g3,
        g4=g4,
        prediction=pred,
        som2=n(v_s[-1] - g1[-1]),
        g1_g2=n(g1[-1] - g2),
        g2_g3=n(g2 - g3),
        cut2=n(g3 - g4),
        cut3=n(g4 - pred),
        g3_pred=n(g3 - pred),
        vs_norm=op.weighted_norm(v_s),
        vs_g1_norm=op.weighted_norm(v_s - g1),
    )
    sample.g = chain
    return chain
