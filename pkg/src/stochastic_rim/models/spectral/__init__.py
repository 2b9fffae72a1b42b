from .model import (
    SpectralModel,
    apply_b,
    apply_b_cutoff,
    brute_force_b,
    build_burgers,
    compute_cb,
    compute_m_alpha_lambda,
    energy_residual,
    ls_inverse_bs,
    norms,
)
from .cutoff import cutoff_lipschitz_factor, cutoff_profile
from .conditions import ConditionReport, check_conditions
from .config import SpectralConfig, dump_tensor_csv, load_model_config
