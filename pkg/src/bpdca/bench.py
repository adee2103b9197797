"""Seeded benchmark experiments: iteration tables and success-probability curves."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigurationError
from .phase_retrieval import (
    BOUNDS,
    accuracy_metric,
    default_start,
    generate_gaussian_instance,
    make_problem,
    relative_error,
    run_wirtinger_flow,
    spectral_initialization,
)
from .solvers import NUMERIC_FAILURE, SolverConfig, solve

SOLVERS = ("bpdca", "bpdcae", "bpg", "bpge", "wf")
SOLVER_KERNEL = {"bpdca": "quartic", "bpdcae": "quartic", "bpg": "quartic-quad", "bpge": "quartic-quad"}
SOLVER_BOUND = {"bpdca": "gaussian", "bpdcae": "gaussian", "bpg": "bpg", "bpge": "bpg", "wf": "none"}

FULL_GRID = [(m, d) for m in (10000, 20000, 30000) for d in (10, 50, 100, 200)]
FULL_SOLVERS = [
    ("bpg", "bpg"), ("bpdca", "dc-sum"), ("bpdca", "gaussian"),
    ("bpge", "bpg"), ("bpdcae", "dc-sum"), ("bpdcae", "gaussian"),
]


@dataclass
class ExperimentPlan:
    grid: List[Tuple[int, int]] = field(default_factory=lambda: [(10000, 10)])
    solvers: List[Tuple[str, str]] = field(default_factory=lambda: [("bpdca", "gaussian"), ("bpdcae", "gaussian")])
    instances_per_cell: int = 10
    seed_base: int = 0
    max_iterations: int = 50000
    termination_tol: float = 1e-6
    theta_reg: float = 1.0
    rho: float = 0.99
    fixed_K: Optional[int] = 200
    sparsity: float = 0.05
    delta: float = 0.0
    jobs: int = 1

    def __post_init__(self):
        if self.instances_per_cell < 1:
            raise ConfigurationError("instances_per_cell must be >= 1")
        for solver, bound in self.solvers:
            if solver not in SOLVERS:
                raise ConfigurationError(f"unknown solver {solver!r}")
            if solver == "wf":
                if self.theta_reg != 0:
                    raise ConfigurationError("wf requires theta_reg = 0")
            elif bound not in BOUNDS:
                raise ConfigurationError(f"unknown bound {bound!r} for {solver}")

    def seed(self, cell_index: int, instance_index: int) -> int:
        return self.seed_base + cell_index * self.instances_per_cell + instance_index


@dataclass
class ExperimentRow:
    solver: str
    bound: str
    m: int
    d: int
    mean_iterations: float
    mean_wall_time_s: float
    mean_accuracy: float
    success_count: int
    failure_count: int = 0


@dataclass
class SuccessRow:
    m_over_d: float
    m: int
    solver: str
    trials: int
    successes: int
    success_rate: float


@dataclass
class RunRecord:
    """Outcome of one solver on one instance."""

    solver: str
    bound: str
    seed: int
    iterations: int
    wall_time: float
    accuracy: float
    relative_error: float
    termination_reason: str


def run_solver(inst, solver: str, bound: str, config: SolverConfig, x0=None, delta: float = 0.0):
    """Run one named solver with its natural kernel; returns the SolveResult."""
    if solver == "wf":
        return run_wirtinger_flow(inst, config, x0=x0)
    problem = make_problem(inst, kernel=SOLVER_KERNEL[solver], bound=bound, delta=delta)
    if x0 is None:
        x0 = default_start(inst)
    return solve(problem, config, x0, method=solver)


def _table_task(plan: ExperimentPlan, m: int, d: int, seed: int) -> List[RunRecord]:
    inst = generate_gaussian_instance(m, d, plan.sparsity, plan.theta_reg, seed)
    config = SolverConfig(
        max_iterations=plan.max_iterations,
        termination_tol=plan.termination_tol,
        restart_rho=plan.rho,
        fixed_restart_period=plan.fixed_K,
        record_trace=False,
    )
    x0 = default_start(inst)
    records = []
    for solver, bound in plan.solvers:
        start = None if solver == "wf" else x0
        res = run_solver(inst, solver, bound, config, x0=start, delta=plan.delta)
        records.append(RunRecord(
            solver, bound, seed, res.iterations_used, res.wall_time,
            accuracy_metric(inst, res.final_iterate), relative_error(inst, res.final_iterate),
            res.termination_reason,
        ))
    return records


def _map(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, *zip(*tasks)))
    return [fn(*t) for t in tasks]


def run_table(plan: ExperimentPlan) -> List[List[RunRecord]]:
    """Per-instance records, in plan order (cell, then instance)."""
    tasks = [
        (plan, m, d, plan.seed(ci, ii))
        for ci, (m, d) in enumerate(plan.grid)
        for ii in range(plan.instances_per_cell)
    ]
    return _map(_table_task, tasks, plan.jobs)


def aggregate(plan: ExperimentPlan, records: Sequence[List[RunRecord]]) -> List[ExperimentRow]:
    rows = []
    n = plan.instances_per_cell
    for ci, (m, d) in enumerate(plan.grid):
        cell = records[ci * n:(ci + 1) * n]
        for si, (solver, bound) in enumerate(plan.solvers):
            runs = [inst_records[si] for inst_records in cell]
            rows.append(ExperimentRow(
                solver=solver,
                bound=bound if solver != "wf" else "none",
                m=m,
                d=d,
                mean_iterations=float(np.mean([r.iterations for r in runs])),
                mean_wall_time_s=float(np.mean([r.wall_time for r in runs])),
                mean_accuracy=float(np.mean([r.accuracy for r in runs])),
                success_count=sum(r.termination_reason == "converged" for r in runs),
                failure_count=sum(r.termination_reason == NUMERIC_FAILURE for r in runs),
            ))
    return rows


def cmd_table(plan: ExperimentPlan) -> List[ExperimentRow]:
    """Average iterations, wall time and accuracy per (cell, solver)."""
    return aggregate(plan, run_table(plan))


def _success_task(d, ratio, seed, sparsity, iter_cap, solvers, rho, fixed_K, delta):
    m = int(round(ratio * d))
    inst = generate_gaussian_instance(m, d, sparsity, 0.0, seed)
    x0 = spectral_initialization(inst)
    config = SolverConfig(
        max_iterations=iter_cap,
        termination_tol=0.0,
        restart_rho=rho,
        fixed_restart_period=fixed_K,
        record_trace=False,
    )
    out = []
    for solver in solvers:
        res = run_solver(inst, solver, SOLVER_BOUND[solver], config, x0=x0, delta=delta)
        out.append(relative_error(inst, res.final_iterate))
    return out


def cmd_success_prob(d: int = 128, m_over_d_list: Iterable[float] = (1, 2, 4, 6, 8),
                     trials: int = 20, iter_cap: int = 2500, seed_base: int = 0,
                     solvers: Sequence[str] = ("bpdcae", "wf"), sparsity: float = 0.05,
                     rho: float = 0.99, fixed_K: Optional[int] = 200, delta: float = 0.0,
                     success_tol: float = 1e-5, jobs: int = 1) -> List[SuccessRow]:
    """Fraction of trials whose final relative error is below ``success_tol``.

    Every solver in a trial starts from the same spectral initialization and
    runs exactly ``iter_cap`` iterations on an unregularized instance.
    """
    if trials < 0:
        raise ConfigurationError("trials must be nonnegative")
    for s in solvers:
        if s not in SOLVERS:
            raise ConfigurationError(f"unknown solver {s!r}")
    ratios = list(m_over_d_list)
    if trials == 0:
        return []
    tasks = [
        (d, r, seed_base + ri * trials + t, sparsity, iter_cap, tuple(solvers), rho, fixed_K, delta)
        for ri, r in enumerate(ratios)
        for t in range(trials)
    ]
    errors = _map(_success_task, tasks, jobs)
    rows = []
    for ri, r in enumerate(ratios):
        block = errors[ri * trials:(ri + 1) * trials]
        for si, solver in enumerate(solvers):
            wins = sum(e[si] < success_tol for e in block)
            rows.append(SuccessRow(float(r), int(round(r * d)), solver, trials, wins, wins / trials))
    return rows


def write_rows_csv(rows, fh, row_type=None) -> None:
    """Write dataclass rows as CSV with the dataclass field order as header."""
    row_type = row_type or (type(rows[0]) if rows else None)
    writer = csv.writer(fh, lineterminator="\n")
    if row_type is not None:
        writer.writerow([f.name for f in fields(row_type)])
    for row in rows:
        writer.writerow([_fmt(v) for v in astuple(row)])


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "-inf" if v < 0 else "inf"
        return repr(v)
    return v
