"""
Monte Carlo studies: MSE curves, slope fits, parameter sweeps and manifests.
"""

from .manifest import build_manifest, write_manifest
from .monte_carlo import (
    GraphRecord,
    MonteCarloResult,
    build_family,
    build_graph,
    build_x0,
    consensus_bias,
    monte_carlo_mse,
    mse_frame,
    require_assumptions,
)
from .slope import SlopeEstimate, default_window, empirical_slope
from .studies import (
    StudyResult,
    algorithm_column,
    algorithm_comparison,
    alpha_column,
    auto_ticks,
    clock_sweep,
    failure_study,
    p_e_column,
    replicated_mse,
    slope_vs_bound_study,
)

__all__ = [
    "GraphRecord",
    "MonteCarloResult",
    "build_family",
    "build_graph",
    "build_x0",
    "consensus_bias",
    "monte_carlo_mse",
    "mse_frame",
    "require_assumptions",
    "SlopeEstimate",
    "default_window",
    "empirical_slope",
    "StudyResult",
    "algorithm_column",
    "algorithm_comparison",
    "alpha_column",
    "auto_ticks",
    "clock_sweep",
    "failure_study",
    "p_e_column",
    "replicated_mse",
    "slope_vs_bound_study",
    "build_manifest",
    "write_manifest",
]
