import logging
from dataclasses import asdict, dataclass

from scipy.special import gamma

from stochastic_rim.errors import ConfigurationError
from .model import SpectralModel, compute_m_alpha_lambda

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditionReport:
    """Parameter-admissibility conditions of the manifold construction."""

    nu: float
    eta: float
    lam: float
    delta: float
    r_cut: float
    c_b: float
    l_r: float
    m_alpha_lambda: float

    # L_R [C_alpha/(eta+nu) + M Gamma(1-alpha)/(lam-eta-nu)^(1-alpha)]; contraction needs < 1
    contraction_bound: float
    condition1: bool
    margin1: float

    # lambda* >= 2(1+1/delta)^2 L_R^2 + 4(1+delta) L_R
    condition2: bool
    margin2: float

    # lambda* > 4 nu + 2 L_R^2 (1+1/delta)^2
    condition3: bool
    margin3: float

    @property
    def all_satisfied(self) -> bool:
        return self.condition1 and self.condition2 and self.condition3

    def to_dict(self) -> dict:
        out = asdict(self)
        out["all_satisfied"] = self.all_satisfied
        return out


def check_conditions(
    model: SpectralModel,
    nu: float,
    eta: float,
    delta: float,
    lam: float,
) -> ConditionReport:
    """
    Evaluate the contraction condition and the two cone conditions.

    Requires 0 < eta + nu < lam < lambda*; violations raise ConfigurationError.
    """
    lam_star = model.lambda_star
    if not (0.0 < eta + nu < lam < lam_star):
        raise ConfigurationError(
            f"need 0 < eta+nu < lambda < lambda*: eta+nu={eta + nu}, lambda={lam}, lambda*={lam_star}"
        )
    if delta <= 0:
        raise ConfigurationError(f"cone aperture delta must be positive, got {delta}")

    c_b = model.c_b
    l_r = 2.0 * model.r_cut * c_b
    m = compute_m_alpha_lambda(model, lam)
    a = model.alpha

    bound = l_r * (model.c_alpha / (eta + nu) + m * gamma(1.0 - a) / (lam - eta - nu) ** (1.0 - a))
    rhs2 = 2.0 * (1.0 + 1.0 / delta) ** 2 * l_r ** 2 + 4.0 * (1.0 + delta) * l_r
    rhs3 = 4.0 * nu + 2.0 * l_r ** 2 * (1.0 + 1.0 / delta) ** 2

    report = ConditionReport(
        nu=nu,
        eta=eta,
        lam=lam,
        delta=delta,
        r_cut=model.r_cut,
        c_b=c_b,
        l_r=l_r,
        m_alpha_lambda=m,
        contraction_bound=float(bound),
        condition1=bool(bound < 1.0),
        margin1=float(1.0 - bound),
        condition2=bool(lam_star >= rhs2),
        margin2=float(lam_star - rhs2),
        condition3=bool(lam_star > rhs3),
        margin3=float(lam_star - rhs3),
    )
    if not report.all_satisfied:
        logger.info(
            f"Conditions for R={model.r_cut}: c1={report.condition1} c2={report.condition2} c3={report.condition3}"
        )
    return report
