import numpy as np
import pytest

from bpdca.exceptions import ConfigurationError, NumericError
from bpdca.kernels import KernelFunction
from bpdca.phase_retrieval import generate_gaussian_instance, make_problem
from bpdca.problem import DcProblem, euclidean_prox_subproblem, objective, solve_subproblem


def _kernel_as_f1(kind="quartic-quad", d=3):
    h = KernelFunction(kind, d)
    return DcProblem(dimension=d, f1_value=h.value, f1_gradient=h.gradient, kernel=h, smad_constant=1.0)


def test_objective_combines_parts():
    p = DcProblem(
        dimension=2,
        f1_value=lambda x: float(x @ x),
        f1_gradient=lambda x: 2 * x,
        kernel=KernelFunction("sq-euclid", 2),
        smad_constant=2.0,
        f2_value=lambda x: float(x[0]),
        f2_subgradient=lambda x: np.array([1.0, 0.0]),
        g_value=lambda x: 3.0,
    )
    assert objective(p, np.array([1.0, 2.0])) == 5.0 - 1.0 + 3.0
    with pytest.raises(ValueError):
        objective(p, np.zeros(3))


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_subproblem_with_f1_equal_to_kernel(lam, rng):
    p = _kernel_as_f1()
    for _ in range(20):
        anchor = rng.normal(size=3)
        u = solve_subproblem(p, anchor, np.zeros(3), lam)
        np.testing.assert_allclose(p.kernel.gradient(u), (1 - lam) * p.kernel.gradient(anchor),
                                   atol=1e-8 * (1 + np.linalg.norm(anchor) ** 3))
        # nothing nearby does better
        best = p.subproblem_objective(u, anchor, np.zeros(3), lam)
        for _ in range(20):
            trial = u + rng.normal(scale=1e-3, size=3)
            assert p.subproblem_objective(trial, anchor, np.zeros(3), lam) >= best - 1e-12


def test_fixed_point_of_the_mapping():
    p = _kernel_as_f1()
    anchor = np.array([0.3, -1.2, 2.0])
    xi = p.f1_gradient(anchor)
    np.testing.assert_allclose(solve_subproblem(p, anchor, xi, 0.5), anchor, atol=1e-10)


def test_subproblem_errors():
    p = _kernel_as_f1()
    with pytest.raises(ConfigurationError):
        solve_subproblem(p, np.ones(3), np.zeros(3), 0.0)
    with pytest.raises(NumericError):
        solve_subproblem(p, np.array([np.nan, 0.0, 0.0]), np.zeros(3), 0.5)
    with pytest.raises(ConfigurationError):
        DcProblem(dimension=2, f1_value=float, f1_gradient=float,
                  kernel=KernelFunction("quartic", 3), smad_constant=1.0)
    with pytest.raises(ConfigurationError):
        DcProblem(dimension=3, f1_value=float, f1_gradient=float,
                  kernel=KernelFunction("quartic", 3), smad_constant=0.0)


def test_euclidean_prox_subproblem_soft_thresholds():
    p = DcProblem(
        dimension=2,
        f1_value=lambda x: 0.5 * float(x @ x),
        f1_gradient=lambda x: x.copy(),
        kernel=KernelFunction("sq-euclid", 2),
        smad_constant=1.0,
        g_value=lambda x: float(np.abs(x).sum()),
        g_prox=lambda v, t: np.sign(v) * np.maximum(np.abs(v) - t, 0.0),
        subproblem=euclidean_prox_subproblem,
    )
    u = p.solve_subproblem(np.array([4.0, 0.2]), np.zeros(2), 0.5)
    np.testing.assert_allclose(u, [1.5, 0.0])
    q = _kernel_as_f1("quartic", 2)
    with pytest.raises(ConfigurationError):
        euclidean_prox_subproblem(q, np.ones(2), np.zeros(2), 0.5)


def test_closed_form_agrees_with_generic_fallback(rng):
    inst = generate_gaussian_instance(60, 5, sparsity=1.0, theta_reg=0.3, seed=4)
    exact = make_problem(inst, "quartic", "dc-sum")
    fallback = make_problem(inst, "quartic", "dc-sum")
    object.__setattr__(fallback, "subproblem", None)
    for _ in range(20):
        x = rng.normal(size=5)
        lam = 0.8 / exact.smad_constant
        np.testing.assert_allclose(
            fallback.solve_subproblem(x, fallback.f2_grad(x), lam),
            exact.solve_subproblem(x, exact.f2_grad(x), lam),
            atol=1e-6,
        )


@pytest.mark.parametrize("kernel,bound", [("quartic", "dc-sum"), ("quartic-quad", "bpg")])
def test_sufficient_decrease_from_random_anchors(kernel, bound, rng):
    inst = generate_gaussian_instance(80, 6, sparsity=0.5, theta_reg=0.5, seed=7)
    p = make_problem(inst, kernel, bound)
    for lam_frac in (0.5, 0.99):
        lam = lam_frac / p.smad_constant
        for _ in range(100):
            x = rng.normal(size=6) * rng.choice([0.1, 1.0, 3.0])
            xi = p.f2_grad(x)
            x_new = p.solve_subproblem(x, xi, lam)
            lhs = lam * p.objective(x_new)
            rhs = lam * p.objective(x) - (1 - lam * p.smad_constant) * p.kernel.distance(x_new, x)
            assert lhs <= rhs + 1e-10 * lam * (1 + abs(p.objective(x)))
