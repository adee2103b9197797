"""Brute-force numeric references for checking closed forms and gradients.

Nothing here is on a benchmark timing path. The routines deliberately avoid
the closed-form machinery they are used to validate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .kernels import KernelFunction

__all__ = [
    "OracleReport",
    "finite_difference_gradient",
    "generic_numeric_subproblem",
    "golden_section",
    "l1_subproblem_objective",
    "numeric_subproblem_oracle",
    "subproblem_oracle_report",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OracleReport:
    oracle_value: float
    candidate_value: float
    gap: float
    passed: bool
    evaluations: int


def finite_difference_gradient(f_value: Callable[[np.ndarray], float], x, step: float = 1e-5):
    """Central-difference gradient of ``f_value`` at ``x``."""
    if not step > 0:
        raise ConfigurationError("step must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (f_value(x + e) - f_value(x - e)) / (2.0 * step)
    return grad


def golden_section(fun, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 500):
    """Minimize a unimodal scalar function on ``[lo, hi]``.

    Returns ``(argmin, min_value, n_evaluations)``.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    evals = 2
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
        evals += 1
    # the interval endpoints are candidates too (minimum on the boundary)
    best = min(((fc, c), (fd, d), (fun(a), a), (fun(b), b)))
    return best[1], best[0], evals + 2


def _quad_weight(kernel_kind: str) -> float:
    kind = KernelFunction(kernel_kind, 1).kind
    if kind == "quartic":
        return 0.0
    if kind == "quartic-quad":
        return 1.0
    raise ConfigurationError(f"oracle supports the quartic kernels only, got {kernel_kind!r}")


def l1_subproblem_objective(y, c, tau: float, kernel_kind: str) -> float:
    """``tau |y|_1 + h(y) - <c, y>`` for a quartic-type kernel ``h``."""
    q = _quad_weight(kernel_kind)
    y = np.asarray(y, dtype=float)
    sq = float(y @ y)
    return float(tau * np.abs(y).sum() + 0.25 * sq * sq + 0.5 * q * sq - np.dot(c, y))


def _radial_search(c, tau, q, tol):
    shrunk = np.sign(c) * np.maximum(np.abs(c) - tau, 0.0)
    norm = np.linalg.norm(shrunk)
    if norm == 0.0:
        return np.zeros_like(c), 1
    u = shrunk / norm

    def along(r):
        sq = r * r
        return tau * r * np.abs(u).sum() + 0.25 * sq * sq + 0.5 * q * sq - r * float(c @ u)

    r, _, evals = golden_section(along, 0.0, float(np.linalg.norm(c)) + 1.0, tol=tol)
    return r * u, evals


def _positive_cubic_root(p, rhs):
    """Unique positive root ``r`` of ``r^3 + p r = rhs`` for ``p >= 0``, ``rhs > 0``."""
    disc = np.sqrt(rhs * rhs / 4.0 + p ** 3 / 27.0)
    r = np.cbrt(rhs / 2.0 + disc) + np.cbrt(rhs / 2.0 - disc)
    r = np.maximum(r, 0.0)
    for _ in range(4):
        f = r ** 3 + p * r - rhs
        r = r - f / (3.0 * r * r + p + 1e-300)
    return np.maximum(r, 0.0)


def _coordinate_descent(c, tau, q, starts, tol, max_sweeps):
    y = starts.copy()
    evals = 0
    for _ in range(max_sweeps):
        change = 0.0
        for i in range(c.size):
            rest = np.einsum("ij,ij->i", y, y) - y[:, i] ** 2
            excess = abs(c[i]) - tau
            old = y[:, i].copy()
            if excess <= 0:
                y[:, i] = 0.0
            else:
                y[:, i] = np.sign(c[i]) * _positive_cubic_root(rest + q, excess)
            change = max(change, float(np.max(np.abs(y[:, i] - old))))
            evals += y.shape[0]
        if change <= tol:
            return y, evals, True
    return y, evals, False


def numeric_subproblem_oracle(
    c,
    tau: float,
    kernel_kind: str,
    tol: float = 1e-12,
    n_starts: int = 50,
    seed: int = 0,
    max_sweeps: int = 20000,
    return_report: bool = False,
):
    """Minimize ``tau |y|_1 + h(y) - <c, y>`` numerically.

    Two independent searches are run: golden-section on the radius along the
    soft-thresholded direction of ``c``, and exact coordinate descent from
    ``n_starts`` random starting points. The lowest objective wins.
    """
    if tau < 0:
        raise ConfigurationError("tau must be nonnegative")
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    c = np.asarray(c, dtype=float)
    q = _quad_weight(kernel_kind)
    radial, evals = _radial_search(c, tau, q, tol)
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.linalg.norm(c)) ** (1.0 / 3.0))
    starts = rng.standard_normal((n_starts, c.size)) * scale
    cd, cd_evals, converged = _coordinate_descent(c, tau, q, starts, tol, max_sweeps)
    evals += cd_evals
    candidates = [radial] + list(cd)
    values = [l1_subproblem_objective(y, c, tau, kernel_kind) for y in candidates]
    best = int(np.argmin(values))
    y = candidates[best]
    if return_report:
        # how far the two independent searches are from each other
        spread = float(max(values) - min(values))
        return y, OracleReport(values[best], values[0], values[0] - values[best],
                               converged and spread <= 1e-8 * (1 + abs(values[best])), evals)
    return y


def subproblem_oracle_report(candidate, c, tau: float, kernel_kind: str, tol: float = 1e-8,
                             **oracle_kwargs) -> OracleReport:
    """Compare a candidate minimizer against :func:`numeric_subproblem_oracle`."""
    y, inner = numeric_subproblem_oracle(c, tau, kernel_kind, return_report=True, **oracle_kwargs)
    oracle_value = l1_subproblem_objective(y, c, tau, kernel_kind)
    candidate_value = l1_subproblem_objective(candidate, c, tau, kernel_kind)
    gap = candidate_value - oracle_value
    return OracleReport(oracle_value, candidate_value, gap, abs(gap) <= tol, inner.evaluations)


def generic_numeric_subproblem(p, anchor, xi, lam: float, tol: float = 1e-11,
                               max_iter: int = 100000):
    """Solve the Bregman proximal subproblem of ``p`` by proximal gradient descent.

    Minimizes ``g(u) + <grad f1(anchor) - xi, u - anchor> + D_h(u, anchor) / lam``
    with a backtracking step, starting from ``anchor``. Stops when the
    prox-gradient residual drops below ``tol`` (relative to the linear term).
    """
    from .problem import _zero

    anchor = np.asarray(anchor, dtype=float)
    if p.g_prox is None and p.g_value is not _zero:
        raise ConfigurationError("generic subproblem solver needs g_prox for a nonzero g")
    prox = p.g_prox if p.g_prox is not None else (lambda v, t: v)
    h = p.kernel
    v = p.f1_gradient(anchor) - xi
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite gradient in subproblem")
    grad_h_anchor = h.gradient(anchor)

    def smooth(u):
        return float(v @ (u - anchor)) + h.distance(u, anchor) / lam

    def smooth_grad(u):
        return v + (h.gradient(u) - grad_h_anchor) / lam

    scale = 1.0 + float(np.linalg.norm(v))
    u = anchor.copy()
    t = lam / max(1.0, 3.0 * float(anchor @ anchor) + 1.0)
    for _ in range(max_iter):
        gu = smooth_grad(u)
        fu = smooth(u)
        while True:
            u_new = prox(u - t * gu, t)
            diff = u_new - u
            if smooth(u_new) <= fu + float(gu @ diff) + float(diff @ diff) / (2 * t) + 1e-15 * abs(fu):
                break
            t *= 0.5
            if t < 1e-300:
                raise NumericError("step size underflow in generic subproblem")
        residual = float(np.linalg.norm(diff)) / t
        u = u_new
        if residual <= tol * scale:
            return u
        t *= 1.25
    raise NumericError("generic subproblem solver hit its iteration cap")
