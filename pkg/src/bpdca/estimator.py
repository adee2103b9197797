"""scikit-learn style estimator wrapping the phase-retrieval solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ConfigurationError
from .phase_retrieval import (
    PhaseRetrievalInstance,
    default_start,
    make_problem,
    run_wirtinger_flow,
    spectral_initialization,
)
from .solvers import SolverConfig, solve

_DEFAULT_KERNEL = {"bpdca": "quartic", "bpdcae": "quartic", "bpg": "quartic-quad", "bpge": "quartic-quad"}
_DEFAULT_BOUND = {"bpdca": "gaussian", "bpdcae": "gaussian", "bpg": "bpg", "bpge": "bpg"}


class PhaseRetrievalRegressor(RegressorMixin, BaseEstimator):
    """Recover ``x`` from squared measurements ``y_r = <X_r, x>^2``.

    Each row of ``X`` is a sensing vector. After :meth:`fit`, ``coef_`` holds the
    recovered signal (defined up to a global sign) and :meth:`predict` returns
    ``(X @ coef_) ** 2``.

    Parameters
    ----------
    solver : {"bpdca", "bpdcae", "bpg", "bpge", "wf"}
    theta : float
        Weight of the l1 regularizer (must be 0 for ``"wf"``).
    kernel, bound : str or None
        Kernel and L-smad constant; ``None`` picks the natural pairing for
        ``solver``.
    init : {"random", "spectral"}
    """

    def __init__(self, solver="bpdcae", theta=1.0, kernel=None, bound=None, delta=0.0,
                 init="random", max_iter=50000, tol=1e-6, rho=0.99, restart_period=200,
                 mu_max=0.2, random_state=None):
        self.solver = solver
        self.theta = theta
        self.kernel = kernel
        self.bound = bound
        self.delta = delta
        self.init = init
        self.max_iter = max_iter
        self.tol = tol
        self.rho = rho
        self.restart_period = restart_period
        self.mu_max = mu_max
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if np.any(y < 0):
            raise ValueError("squared measurements y must be nonnegative")
        if self.init not in ("random", "spectral"):
            raise ConfigurationError(f"unknown init {self.init!r}")
        seed = 0 if self.random_state is None else self.random_state
        inst = PhaseRetrievalInstance(X, y, np.zeros(X.shape[1]), self.theta, seed)
        x0 = spectral_initialization(inst) if self.init == "spectral" else default_start(inst)
        config = SolverConfig(
            max_iterations=self.max_iter,
            termination_tol=self.tol,
            restart_rho=self.rho,
            fixed_restart_period=self.restart_period,
            seed=seed,
        )
        if self.solver == "wf":
            result = run_wirtinger_flow(inst, config, x0=x0, mu_max=self.mu_max)
        elif self.solver in _DEFAULT_KERNEL:
            problem = make_problem(
                inst,
                kernel=self.kernel or _DEFAULT_KERNEL[self.solver],
                bound=self.bound or _DEFAULT_BOUND[self.solver],
                delta=self.delta,
            )
            result = solve(problem, config, x0, method=self.solver)
        else:
            raise ConfigurationError(f"unknown solver {self.solver!r}")
        self.coef_ = result.final_iterate
        self.n_iter_ = result.iterations_used
        self.result_ = result
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return (X @ self.coef_) ** 2
