from .config import PerronConfig
from .history import HistoryFunction
from .operator import PerronOperator, apply_T
from .solver import ManifoldSample, measure_contraction, psi_graph, psi_sample, solve_fixed_point
from .gchain import GChain, compute_g_chain
from .graph import DistanceResult, PsiCache, dist_to_manifold
