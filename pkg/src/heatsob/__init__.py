"""Heat kernels, intrinsic metrics and optimal Sobolev constants on finite weighted graphs."""

from .certificate import Certificate
from .checkers import (
    check_ball_comparison, check_chi_hypothesis, check_gaussian, check_local_regularity,
    check_mean_value, check_noncollapsing, check_on_diagonal, check_semigroup_regularization,
    check_sobolev, check_volume_doubling, check_weak_sobolev,
)
from .corrections import CorrectionProfile, Dimension, GuardError, nu, zeta
from .generators import generate_family
from .graph import GraphError, MeasureMode, WeightedGraph, build_graph
from .io import load_graph, save_graph
from .metric import MetricStructure, build_metric, verify_intrinsic
from .pipelines import (
    PipelineConfig, Report, run_counting, run_forward_normalizing, run_general,
    run_reverse_normalizing,
)
from .report import emit_report
from .sobolev import (
    Budget, SobolevProblem, grid_oracle_constant, minimal_sobolev_constant, nash_check,
)
from .spectral import decompose, heat_evolve_ode, heat_kernel

__all__ = [
    "Budget", "Certificate", "CorrectionProfile", "Dimension", "GraphError", "GuardError",
    "MeasureMode", "MetricStructure", "PipelineConfig", "Report", "SobolevProblem",
    "WeightedGraph", "build_graph", "build_metric", "check_ball_comparison",
    "check_chi_hypothesis", "check_gaussian", "check_local_regularity", "check_mean_value",
    "check_noncollapsing", "check_on_diagonal", "check_semigroup_regularization",
    "check_sobolev", "check_volume_doubling", "check_weak_sobolev", "decompose", "emit_report",
    "generate_family", "grid_oracle_constant", "heat_evolve_ode", "heat_kernel", "load_graph",
    "minimal_sobolev_constant", "nash_check", "nu", "run_counting", "run_forward_normalizing",
    "run_general", "run_reverse_normalizing", "save_graph", "verify_intrinsic", "zeta",
]
