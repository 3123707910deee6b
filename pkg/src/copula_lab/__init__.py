"""Empirical copula processes, kernel-smoothed copulas and their Gaussian limit fields."""

__version__ = "0.1.0"

from .copulas import CopulaModel, Family
from .empirical import (
    alpha_process,
    beta_process,
    copula_process,
    empirical_copula,
    empirical_copula_grid,
    joint_ecdf,
    sup_deviation,
)
from .errors import ConfigError, NumericalError, TiesError
from .fields import (
    build_factor,
    kstar_covariance,
    kstar_variance_sup,
    sample_bridge,
    sample_kiefer,
    sample_kstar,
)
from .grid import Grid
from .rankstats import (
    ScoreFunction,
    delta_method_width,
    kendall_functional,
    lil_rho,
    rank_statistic,
    spearman_functional,
)
from .sample import Sample, SampleKind
from .smoothing import Bandwidth, Kernel, decompose_smoothing_error, smoothed_copula, verify_order

__all__ = [
    "Bandwidth",
    "ConfigError",
    "CopulaModel",
    "Family",
    "Grid",
    "Kernel",
    "NumericalError",
    "Sample",
    "SampleKind",
    "ScoreFunction",
    "TiesError",
    "alpha_process",
    "beta_process",
    "build_factor",
    "copula_process",
    "decompose_smoothing_error",
    "delta_method_width",
    "empirical_copula",
    "empirical_copula_grid",
    "joint_ecdf",
    "kendall_functional",
    "kstar_covariance",
    "kstar_variance_sup",
    "lil_rho",
    "rank_statistic",
    "sample_bridge",
    "sample_kiefer",
    "sample_kstar",
    "smoothed_copula",
    "spearman_functional",
    "sup_deviation",
    "verify_order",
]
