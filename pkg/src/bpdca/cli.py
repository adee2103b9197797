"""Command-line entry point: ``bpdca {table,success-prob,solve,gen}``."""

from __future__ import annotations

import argparse
import contextlib
import sys

from .bench import (
    FULL_GRID,
    FULL_SOLVERS,
    SOLVER_BOUND,
    SOLVER_KERNEL,
    ExperimentPlan,
    ExperimentRow,
    SuccessRow,
    cmd_success_prob,
    cmd_table,
    write_rows_csv,
)
from .exceptions import ConfigurationError
from .kernels import KERNEL_KINDS
from .phase_retrieval import (
    BOUNDS,
    accuracy_metric,
    default_start,
    generate_gaussian_instance,
    load_instance,
    make_problem,
    relative_error,
    run_wirtinger_flow,
    save_instance,
    spectral_initialization,
)
from .solvers import NUMERIC_FAILURE, SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(text):
    cells = []
    for item in text.split(","):
        m, _, d = item.strip().lower().partition("x")
        cells.append((int(m), int(d)))
    return cells


def _solver_list(text):
    out = []
    for item in text.split(","):
        solver, _, bound = item.strip().partition(":")
        out.append((solver, bound or SOLVER_BOUND.get(solver, "")))
    return out


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _optional_K(text):
    k = int(text)
    return None if k <= 0 else k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--full-scale", action="store_true",
                        help="use the full experimental grid and repetition counts")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    algo = argparse.ArgumentParser(add_help=False)
    algo.add_argument("--max-iter", type=int, default=50000)
    algo.add_argument("--tol", type=float, default=1e-6)
    algo.add_argument("--rho", type=float, default=0.99)
    algo.add_argument("--K", type=_optional_K, default=200, help="fixed restart period (<= 0 disables)")
    algo.add_argument("--delta", type=float, default=0.0)
    algo.add_argument("--sparsity", type=float, default=0.05)

    parser = _Parser(prog="bpdca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("table", parents=[common, algo], help="iteration/accuracy tables")
    p.add_argument("--grid", type=_grid, default=None, help="cells like 10000x10,10000x50")
    p.add_argument("--solvers", type=_solver_list, default=None,
                   help="solver:bound pairs, e.g. bpdca:gaussian,bpg:bpg")
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--theta", type=float, default=1.0)

    p = sub.add_parser("success-prob", parents=[common, algo], help="empirical recovery rates")
    p.add_argument("--d", type=int, default=128)
    p.add_argument("--ratios", type=_floats, default=None, help="m/d values, e.g. 1,2,4,6,8")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--iter-cap", type=int, default=2500)
    p.add_argument("--solvers", default="bpdcae,wf")

    p = sub.add_parser("solve", parents=[common, algo], help="run one solver on one instance")
    p.add_argument("--m", type=int, default=10000)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--solver", choices=["bpdca", "bpdcae", "bpg", "bpge", "wf"], default="bpdcae")
    p.add_argument("--kernel", choices=list(KERNEL_KINDS), default=None)
    p.add_argument("--bound", choices=list(BOUNDS), default=None)
    p.add_argument("--init", choices=["random", "spectral"], default="random")
    p.add_argument("--instance", help="load the instance from a file instead of generating it")
    p.add_argument("--monitor-M", dest="monitor_M", default=None,
                   help="record H_M with this M ('auto' for the interval midpoint)")

    p = sub.add_parser("gen", parents=[common], help="write a Gaussian instance file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--sparsity", type=float, default=0.05)
    p.add_argument("--theta", type=float, default=1.0)
    return parser


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _table(args):
    if args.full_scale:
        grid, solvers, instances = FULL_GRID, FULL_SOLVERS, 100
    else:
        grid, solvers, instances = [(10000, 10)], FULL_SOLVERS, 10
    plan = ExperimentPlan(
        grid=args.grid or grid,
        solvers=args.solvers or solvers,
        instances_per_cell=args.instances or instances,
        seed_base=args.seed,
        max_iterations=args.max_iter,
        termination_tol=args.tol,
        theta_reg=args.theta,
        rho=args.rho,
        fixed_K=args.K,
        sparsity=args.sparsity,
        delta=args.delta,
        jobs=args.jobs,
    )
    rows = cmd_table(plan)
    with _output(args.out) as fh:
        write_rows_csv(rows, fh, ExperimentRow)
    return EXIT_OK


def _success(args):
    ratios = args.ratios or (list(range(1, 11)) if args.full_scale else [1, 2, 4, 6, 8])
    trials = args.trials if args.trials is not None else (100 if args.full_scale else 20)
    rows = cmd_success_prob(
        d=args.d, m_over_d_list=ratios, trials=trials, iter_cap=args.iter_cap,
        seed_base=args.seed, solvers=[s.strip() for s in args.solvers.split(",")],
        sparsity=args.sparsity, rho=args.rho, fixed_K=args.K, delta=args.delta, jobs=args.jobs,
    )
    with _output(args.out) as fh:
        write_rows_csv(rows, fh, SuccessRow)
    return EXIT_OK


def _solve(args):
    if args.instance:
        inst = load_instance(args.instance).with_theta(args.theta)
    else:
        inst = generate_gaussian_instance(args.m, args.d, args.sparsity, args.theta, args.seed)
    x0 = spectral_initialization(inst) if args.init == "spectral" else default_start(inst)
    monitor = args.monitor_M
    if monitor is not None and monitor != "auto":
        monitor = float(monitor)
    config = SolverConfig(
        max_iterations=args.max_iter,
        termination_tol=args.tol,
        restart_rho=args.rho,
        fixed_restart_period=args.K,
        monitor_M=monitor,
        seed=args.seed,
    )
    if args.solver == "wf":
        result = run_wirtinger_flow(inst, config, x0=x0)
    else:
        problem = make_problem(
            inst,
            kernel=args.kernel or SOLVER_KERNEL[args.solver],
            bound=args.bound or SOLVER_BOUND[args.solver],
            delta=args.delta,
        )
        result = solve(problem, config, x0, method=args.solver)
    if args.out:
        result.write_trace_csv(args.out)
    acc = accuracy_metric(inst, result.final_iterate)
    print(
        f"solver={args.solver} m={inst.m} d={inst.d} iterations={result.iterations_used} "
        f"accuracy={acc:.4f} relative_error={relative_error(inst, result.final_iterate):.3e} "
        f"reason={result.termination_reason} wall_time_s={result.wall_time:.3f}"
    )
    return EXIT_NUMERIC if result.termination_reason == NUMERIC_FAILURE else EXIT_OK


def _gen(args):
    if not args.out:
        raise ConfigurationError("gen needs --out")
    inst = generate_gaussian_instance(args.m, args.d, args.sparsity, args.theta, args.seed)
    save_instance(inst, args.out)
    return EXIT_OK


_COMMANDS = {"table": _table, "success-prob": _success, "solve": _solve, "gen": _gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"bpdca: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
