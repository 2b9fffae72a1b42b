from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PerronConfig:
    """Parameters of the Lyapunov-Perron construction."""

    nu: float = 0.0
    # Weight exponent of the history space; need 0 < eta + nu < lam < lambda*
    eta: float = 1.0
    lam: float = 2.5
    # Cone aperture, only enters the cone conditions
    delta: float = 1.0
    # History window [-window, 0]; e^{-(lam-eta-nu) window} must be negligible
    window: float = 40.0
    # One history node every `stride` steps of the noise grid
    stride: int = 2
    tol: float = 1e-12
    max_iter: int = 200
    # Nodes of the psi interpolation cache on [-2R, 2R]
    psi_nodes: int = 65
    # Refuse to solve when the contraction condition fails
    strict: bool = True

    @classmethod
    def burgers(cls, **overrides) -> "PerronConfig":
        """Validated Burgers defaults: nu=0, eta=1, lambda=2.5, delta=1."""
        return replace(cls(), **overrides)

    def with_nu(self, nu: float) -> "PerronConfig":
        return replace(self, nu=nu)
