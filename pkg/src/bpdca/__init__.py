"""Bregman proximal DC algorithms with a phase-retrieval application."""

from .exceptions import ConfigurationError, NumericError
from .kernels import KernelFunction, bregman_distance, kernel_gradient, kernel_value, smad_certificate
from .problem import DcProblem, objective, solve_subproblem
from .solvers import (
    ExtrapolationState,
    SolveResult,
    SolverConfig,
    TraceRecord,
    monitor_auxiliary,
    run_bpdca,
    run_bpdcae,
    run_bpg,
    run_bpge,
    solve,
)
from .phase_retrieval import PhaseRetrievalInstance, generate_gaussian_instance, make_problem
from .estimator import PhaseRetrievalRegressor

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DcProblem",
    "ExtrapolationState",
    "KernelFunction",
    "NumericError",
    "PhaseRetrievalInstance",
    "PhaseRetrievalRegressor",
    "SolveResult",
    "SolverConfig",
    "TraceRecord",
    "bregman_distance",
    "generate_gaussian_instance",
    "kernel_gradient",
    "kernel_value",
    "make_problem",
    "monitor_auxiliary",
    "objective",
    "run_bpdca",
    "run_bpdcae",
    "run_bpg",
    "run_bpge",
    "smad_certificate",
    "solve",
    "solve_subproblem",
]
