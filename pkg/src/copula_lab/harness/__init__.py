"""Monte Carlo studies, configuration and reports."""

from .config import StudyConfig, StudyKind, load_config
from .parallel import replicate_seed, run_tasks, worker_count
from .report import emit_report, render_svg
from .result import StudyResult
from .studies import (
    run_convergence,
    run_distribution_comparison,
    run_lil,
    run_rank_normality,
    run_smoothing,
    run_study,
    two_sample_ks,
)

__all__ = [
    "StudyConfig",
    "StudyKind",
    "StudyResult",
    "emit_report",
    "load_config",
    "render_svg",
    "replicate_seed",
    "run_convergence",
    "run_distribution_comparison",
    "run_lil",
    "run_rank_normality",
    "run_smoothing",
    "run_study",
    "run_tasks",
    "two_sample_ks",
    "worker_count",
]
