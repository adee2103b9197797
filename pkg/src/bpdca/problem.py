"""DC composite problems ``Psi = f1 - f2 + g`` bound to a kernel and an L constant."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .kernels import KernelFunction

__all__ = ["DcProblem", "objective", "solve_subproblem", "euclidean_prox_subproblem"]

Vector = np.ndarray
SubproblemSolver = Callable[["DcProblem", Vector, Vector, float], Vector]


def _zero(x):
    return 0.0


@dataclass(frozen=True)
class DcProblem:
    """The problem ``min f1(x) - f2(x) + g(x)`` over R^d.

    ``f1`` must be convex and C^1 with ``(f1, kernel)`` L-smad; ``f2`` convex
    with a deterministic subgradient selection ``f2_subgradient``. ``g`` is the
    (already weighted) regularizer; ``g_prox(v, t)`` should return the
    proximal point of ``t * g`` at ``v`` and is only needed by the generic
    subproblem fallback.

    ``subproblem(problem, anchor, xi, lam)`` returns a minimizer of
    ``g(u) + <grad f1(anchor) - xi, u - anchor> + D_h(u, anchor) / lam``. When it
    is omitted the numeric fallback in :mod:`bpdca.oracle` is used.
    """

    dimension: int
    f1_value: Callable[[Vector], float]
    f1_gradient: Callable[[Vector], Vector]
    kernel: KernelFunction
    smad_constant: float
    f2_value: Callable[[Vector], float] = _zero
    f2_subgradient: Optional[Callable[[Vector], Vector]] = None
    g_value: Callable[[Vector], float] = _zero
    g_prox: Optional[Callable[[Vector, float], Vector]] = None
    g_convex: bool = True
    subproblem: Optional[SubproblemSolver] = None
    objective_value: Optional[Callable[[Vector], float]] = None
    lower_bound: float = -np.inf
    name: str = "dc-problem"

    def __post_init__(self):
        if self.kernel.dimension != self.dimension:
            raise ConfigurationError(
                f"kernel dimension {self.kernel.dimension} != problem dimension {self.dimension}"
            )
        if not self.smad_constant > 0:
            raise ConfigurationError(f"smad_constant must be positive, got {self.smad_constant}")

    def check_vector(self, x) -> Vector:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a vector of shape ({self.dimension},), got {x.shape}")
        return x

    def f2_grad(self, x) -> Vector:
        if self.f2_subgradient is None:
            return np.zeros(self.dimension)
        return self.f2_subgradient(x)

    def objective(self, x) -> float:
        x = self.check_vector(x)
        if self.objective_value is not None:
            return float(self.objective_value(x))
        return float(self.f1_value(x) - self.f2_value(x) + self.g_value(x))

    def subproblem_objective(self, u, anchor, xi, lam) -> float:
        """Value of the Bregman proximal subproblem at ``u``."""
        v = self.f1_gradient(anchor) - xi
        return float(self.g_value(u) + v @ (u - anchor) + self.kernel.distance(u, anchor) / lam)

    def solve_subproblem(self, anchor, xi, lam) -> Vector:
        anchor = self.check_vector(anchor)
        if not lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {lam}")
        if not np.all(np.isfinite(anchor)) or not np.all(np.isfinite(xi)):
            raise NumericError("non-finite anchor or subgradient")
        solver = self.subproblem
        if solver is None:
            from .oracle import generic_numeric_subproblem

            return generic_numeric_subproblem(self, anchor, xi, lam)
        return solver(self, anchor, xi, lam)


def objective(p: DcProblem, x) -> float:
    return p.objective(x)


def solve_subproblem(p: DcProblem, anchor, f2_subgrad, lam: float) -> Vector:
    return p.solve_subproblem(anchor, f2_subgrad, lam)


def euclidean_prox_subproblem(p: DcProblem, anchor, xi, lam) -> Vector:
    """Closed-form subproblem for the squared Euclidean kernel (a proximal gradient step)."""
    if p.kernel.kind != "sq-euclid":
        raise ConfigurationError("euclidean_prox_subproblem requires the sq-euclid kernel")
    grad = p.f1_gradient(anchor) - xi
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient in subproblem")
    v = anchor - lam * grad
    if p.g_prox is None:
        if p.g_value is not _zero:
            raise ConfigurationError("a nonzero g needs g_prox for the Euclidean subproblem")
        return v
    return p.g_prox(v, lam)
