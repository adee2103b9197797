"""End-to-end acceptance checks.

Each test appends one ``[PASS]``/``[FAIL]`` line to the shared acceptance log
(printed in the pytest terminal summary) before asserting.
"""

import math

import numpy as np
import pytest

from bpdca.bench import ExperimentPlan, cmd_success_prob, run_solver
from bpdca.kernels import KERNEL_KINDS, KernelFunction, smad_certificate
from bpdca.oracle import finite_difference_gradient, l1_subproblem_objective, numeric_subproblem_oracle
from bpdca.phase_retrieval import (
    accuracy_metric,
    closed_form_subproblem,
    default_start,
    f1_eval,
    f1_grad,
    f2_eval,
    f2_grad,
    generate_gaussian_instance,
    l_bound_bpg,
    l_bound_dc_sum,
    l_bound_gaussian,
    make_problem,
)
from bpdca.solvers import (
    SolverConfig,
    complexity_bound_check,
    descent_excess,
    monitor_auxiliary,
    run_bpdca,
    run_bpdcae,
)

pytestmark = pytest.mark.acceptance


def _report(log, number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    log.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def anchor_cell():
    """BPDCA / BPDCAe / BPG records on the ten seeded (m=10000, d=10) instances."""
    plan = ExperimentPlan(grid=[(10000, 10)], instances_per_cell=10)
    config = SolverConfig(record_trace=False)
    out = {"bpdca": [], "bpdcae": [], "bpg": []}
    for i in range(plan.instances_per_cell):
        inst = generate_gaussian_instance(10000, 10, plan.sparsity, plan.theta_reg, plan.seed(0, i))
        x0 = default_start(inst)
        for solver, bound in (("bpdca", "gaussian"), ("bpdcae", "gaussian"), ("bpg", "bpg")):
            res = run_solver(inst, solver, bound, config, x0=x0)
            out[solver].append((res.iterations_used, accuracy_metric(inst, res.final_iterate),
                                res.termination_reason))
    return out


def test_criterion_1_bpdca_anchor(anchor_cell, acceptance_log):
    iters = np.mean([r[0] for r in anchor_cell["bpdca"]])
    acc = np.mean([r[1] for r in anchor_cell["bpdca"]])
    ok = 34 <= iters <= 102 and -6.5 <= acc <= -3.5
    _report(acceptance_log, 1, ok,
            f"BPDCA mean iterations {iters:.1f} in [34, 102], mean accuracy {acc:.3f} in [-6.5, -3.5]")


def test_criterion_2_bpdcae_anchor(anchor_cell, acceptance_log):
    iters = np.mean([r[0] for r in anchor_cell["bpdcae"]])
    wins = sum(e[0] < p[0] for e, p in zip(anchor_cell["bpdcae"], anchor_cell["bpdca"]))
    ok = 16 <= iters <= 48 and wins >= 9
    _report(acceptance_log, 2, ok,
            f"BPDCAe mean iterations {iters:.1f} in [16, 48], faster than BPDCA on {wins}/10 instances")


@pytest.mark.slow
def test_criterion_3_baseline_separation(anchor_cell, acceptance_log):
    bpg = np.mean([r[0] for r in anchor_cell["bpg"]])
    bpdca = np.mean([r[0] for r in anchor_cell["bpdca"]])
    ratio = bpg / bpdca
    plan = ExperimentPlan(grid=[(10000, 50)], instances_per_cell=3)
    config = SolverConfig(record_trace=False)
    capped = []
    for i in range(plan.instances_per_cell):
        inst = generate_gaussian_instance(10000, 50, plan.sparsity, plan.theta_reg, plan.seed(0, i))
        res = run_solver(inst, "bpg", "bpg", config)
        capped.append(res.iterations_used)
    n_capped = sum(n >= 50000 for n in capped)
    ok = ratio >= 15 and n_capped == len(capped)
    _report(acceptance_log, 3, ok,
            f"BPG/BPDCA iteration ratio {ratio:.1f} >= 15 at d=10; BPG at d=50 reached the "
            f"50000 cap on {n_capped}/{len(capped)} instances (iterations {capped})")


def test_criterion_4_bound_ordering(acceptance_log):
    rng = np.random.default_rng(404)
    order_fail = gauss_fail = gauss_checked = 0
    for k in range(50):
        d = (5, 10, 50)[k % 3]
        m = int(d * rng.choice([2, 10, 100, 200]))
        inst = generate_gaussian_instance(m, d, sparsity=1.0, seed=1000 + k)
        bpg, dcs = l_bound_bpg(inst), l_bound_dc_sum(inst)
        order_fail += not dcs <= bpg
        if m >= 100 * d:
            gauss_checked += 1
            gauss_fail += not l_bound_gaussian(inst, 0.0) < dcs
    ok = order_fail == 0 and gauss_fail == 0 and gauss_checked > 0
    _report(acceptance_log, 4, ok,
            f"dc-sum <= bpg bound violated on {order_fail}/50 instances; gaussian < dc-sum violated "
            f"on {gauss_fail}/{gauss_checked} instances with m >= 100 d")


@pytest.mark.slow
def test_criterion_5_success_probability(acceptance_log):
    rows = cmd_success_prob(d=128, m_over_d_list=(2, 4, 6, 8), trials=20, iter_cap=2500,
                            solvers=("bpdcae",))
    rates = [r.success_rate for r in rows]
    ok = rates[-1] >= 0.9 and all(b >= a for a, b in zip(rates, rates[1:]))
    _report(acceptance_log, 5, ok,
            f"BPDCAe success rates at m/d = 2,4,6,8: {rates} (>= 0.9 at 8, non-decreasing)")


def test_criterion_6_descent_invariants(acceptance_log):
    worst_excess = -math.inf
    bound_ok = step_ok = True
    details = []
    for seed in range(5):
        inst = generate_gaussian_instance(2000, 10, seed=600 + seed)
        p = make_problem(inst, "quartic", "dc-sum")
        L = p.smad_constant
        res = run_bpdca(p, SolverConfig(lam=0.9 / L), default_start(inst))
        excess = descent_excess(res, L, rel_tol=1e-10)
        worst_excess = max(worst_excess, float(excess.max()))
        step_ok &= bool(np.all(excess <= 0))
        holds, observed, bound = complexity_bound_check(res, L, psi_lower=0.0)
        bound_ok &= holds
        details.append(res.iterations_used)
    ok = step_ok and bound_ok
    _report(acceptance_log, 6, ok,
            f"per-step descent holds on all iterations ({step_ok}, worst slack {worst_excess:.2e}); "
            f"min-step complexity bound holds ({bound_ok}); run lengths {details}")


def test_criterion_7_auxiliary_monotone(acceptance_log):
    ok = True
    worst = -math.inf
    for seed in range(5):
        inst = generate_gaussian_instance(2000, 10, seed=700 + seed)
        p = make_problem(inst, "quartic", "dc-sum")
        res = run_bpdcae(p, SolverConfig(monitor_M="auto"), default_start(inst))
        M = (1 + 0.99) / (2 * res.lam)
        hm = monitor_auxiliary(res.trace, M, res.lam, 0.99)
        incr = np.diff(hm) - 1e-10 * (1 + np.abs(hm[:-1]))
        worst = max(worst, float(incr.max()))
        ok &= bool(np.all(incr <= 0))
    _report(acceptance_log, 7, ok, f"H_M non-increasing on 5 BPDCAe runs (worst slack {worst:.2e})")


def test_criterion_8_oracle_equivalence(acceptance_log):
    rng = np.random.default_rng(808)
    worst_x = worst_f = 0.0
    for kind in ("quartic", "quartic-quad"):
        for _ in range(100):
            d = int(rng.integers(1, 8))
            c = rng.standard_normal(d) * rng.choice([0.1, 1.0, 10.0])
            tau = float(rng.uniform(0, 1.5) * np.abs(c).max())
            closed = closed_form_subproblem(c, tau, kind)
            numeric = numeric_subproblem_oracle(c, tau, kind)
            worst_x = max(worst_x, float(np.abs(closed - numeric).max()))
            worst_f = max(worst_f, abs(l1_subproblem_objective(closed, c, tau, kind)
                                       - l1_subproblem_objective(numeric, c, tau, kind)))
    ok = worst_x <= 1e-6 and worst_f <= 1e-8
    _report(acceptance_log, 8, ok,
            f"closed form vs numeric oracle on 200 draws: max minimizer gap {worst_x:.2e}, "
            f"max objective gap {worst_f:.2e}")


def test_criterion_9_gradient_geometry(acceptance_log):
    rng = np.random.default_rng(909)
    inst = generate_gaussian_instance(50, 5, sparsity=1.0, seed=9)
    fd_err = 0.0
    pairs = [(lambda x: f1_eval(inst, x), lambda x: f1_grad(inst, x)),
             (lambda x: f2_eval(inst, x), lambda x: f2_grad(inst, x))]
    pairs += [(KernelFunction(k, 5).value, KernelFunction(k, 5).gradient) for k in KERNEL_KINDS]
    for f, g in pairs:
        for _ in range(20):
            x = rng.standard_normal(5)
            exact = g(x)
            approx = finite_difference_gradient(f, x)
            fd_err = max(fd_err, float(np.linalg.norm(approx - exact) / max(np.linalg.norm(exact), 1e-12)))
    three_err = 0.0
    for k in KERNEL_KINDS:
        h = KernelFunction(k, 5)
        for _ in range(1000 // len(KERNEL_KINDS) + 1):
            x, y, z = rng.standard_normal((3, 5)) * rng.choice([0.1, 1.0, 3.0])
            lhs = h.distance(x, z)
            rhs = h.distance(x, y) + h.distance(y, z) + float((h.gradient(y) - h.gradient(z)) @ (x - y))
            scale = 1.0 + abs(h.value(x)) + abs(h.value(y)) + abs(h.value(z))
            three_err = max(three_err, abs(lhs - rhs) / scale)
    samples = [tuple(rng.standard_normal((2, 5)) * rng.choice([0.1, 1.0, 3.0])) for _ in range(1000)]
    report = smad_certificate(lambda x: f1_eval(inst, x), lambda x: f1_grad(inst, x),
                              KernelFunction("quartic", 5), l_bound_dc_sum(inst), samples)
    ok = fd_err <= 1e-5 and three_err <= 1e-10 and report.all_passed
    _report(acceptance_log, 9, ok,
            f"finite-difference rel. error {fd_err:.2e}; three-point identity error {three_err:.2e}; "
            f"smad certificate violations {report.n_violations}/1000")


def test_criterion_10_expected_hessian(acceptance_log):
    rng = np.random.default_rng(1010)
    x = np.array([1.0, -0.5, 2.0, 0.3])
    a = rng.standard_normal((100_000, 4))
    estimate = (a.T * (a @ x) ** 2) @ a / a.shape[0]
    expected = float(x @ x) * np.eye(4) + 2.0 * np.outer(x, x)
    rel = float(np.abs(estimate - expected).max() / np.abs(expected).max())
    _report(acceptance_log, 10, rel <= 0.05,
            f"Monte-Carlo E[<a,x>^2 a a^T] vs |x|^2 I + 2 x x^T: max entry error {rel:.2%} of scale")
