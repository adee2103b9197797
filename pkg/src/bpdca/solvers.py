"""Bregman proximal DC iterations (plain and extrapolated) and BPG baselines."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .problem import DcProblem

__all__ = [
    "ExtrapolationState",
    "SolveResult",
    "SolverConfig",
    "TraceRecord",
    "TRACE_COLUMNS",
    "complexity_bound_check",
    "descent_excess",
    "monitor_auxiliary",
    "run_bpdca",
    "run_bpdcae",
    "run_bpg",
    "run_bpge",
    "solve",
]

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
NUMERIC_FAILURE = "numeric-failure"

TRACE_COLUMNS = ("iter", "psi", "step_norm", "bregman_gap", "beta", "restart", "h_m")

# lam * L may exceed 1 by this much and still count as lam = 1/L
_LIMIT_RTOL = 1e-12


@dataclass
class SolverConfig:
    """Run parameters shared by all solvers.

    ``lam=None`` means ``1 / L`` for the problem at hand, which is the
    step used in the benchmark tables. ``monitor_M="auto"`` picks the
    midpoint ``(1 + rho) / (2 lam)`` of the admissible interval.
    """

    lam: Optional[float] = None
    max_iterations: int = 50000
    termination_tol: float = 1e-6
    extrapolation: bool = False
    restart_rho: float = 0.99
    fixed_restart_period: Optional[int] = 200
    monitor_M: Union[float, str, None] = None
    record_trace: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ConfigurationError(f"lam must be positive, got {self.lam}")
        if not 0.0 <= self.restart_rho < 1.0:
            raise ConfigurationError(f"restart_rho must lie in [0, 1), got {self.restart_rho}")
        if self.fixed_restart_period is not None and self.fixed_restart_period < 1:
            raise ConfigurationError("fixed_restart_period must be >= 1 or None")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.termination_tol < 0:
            raise ConfigurationError("termination_tol must be nonnegative")
        if isinstance(self.monitor_M, str) and self.monitor_M != "auto":
            raise ConfigurationError("monitor_M must be a number, 'auto' or None")

    def resolve_lam(self, L: float):
        """Return ``(lam, at_limit)``; raise when ``lam * L > 1``."""
        lam = 1.0 / L if self.lam is None else float(self.lam)
        prod = lam * L
        if prod > 1.0 + _LIMIT_RTOL:
            raise ConfigurationError(f"step lam={lam:g} violates lam * L < 1 (L={L:g})")
        return lam, prod >= 1.0 - _LIMIT_RTOL

    def resolve_M(self, lam: float, rho: float) -> Optional[float]:
        if self.monitor_M is None:
            return None
        if self.monitor_M == "auto":
            return (1.0 + rho) / (2.0 * lam)
        _check_M(float(self.monitor_M), lam, rho)
        return float(self.monitor_M)


def _check_M(M, lam, rho):
    lo, hi = rho / lam, 1.0 / lam
    slack = 1e-12 * hi
    if not lo - slack <= M <= hi + slack:
        raise ConfigurationError(f"M={M:g} outside the admissible range [{lo:g}, {hi:g}]")


@dataclass
class TraceRecord:
    """One row of an iteration trace.

    ``bregman_gap`` is ``D_h(x^{k-1}, x^k)``; ``forward_gap`` is the reversed
    ``D_h(x^k, x^{k-1})`` used by the descent checks (not written to CSV).
    ``beta`` is the extrapolation weight used to produce ``x^k``.
    """

    iter: int
    psi: float
    step_norm: float
    bregman_gap: float
    beta: float
    restart: bool
    h_m: Optional[float] = None
    forward_gap: float = 0.0


@dataclass
class SolveResult:
    final_iterate: np.ndarray
    iterations_used: int
    termination_reason: str
    trace: List[TraceRecord]
    wall_time: float
    final_objective: float
    lam: float
    method: str = ""
    warnings: List[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.termination_reason == CONVERGED

    def column(self, name: str) -> np.ndarray:
        """Trace column as an array (``nan`` for missing ``h_m`` entries)."""
        values = [getattr(r, name) for r in self.trace]
        return np.array([np.nan if v is None else float(v) for v in values])

    def write_trace_csv(self, path_or_file) -> None:
        """Write the trace with columns ``iter, psi, step_norm, bregman_gap, beta, restart, h_m``."""
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            with open(path_or_file, "w", newline="") as fh:
                self._write_csv(fh)
        else:
            self._write_csv(path_or_file)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        self._write_csv(buf)
        return buf.getvalue()

    def _write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.trace:
            writer.writerow([
                r.iter, repr(r.psi), repr(r.step_norm), repr(r.bregman_gap), repr(r.beta),
                int(r.restart), "" if r.h_m is None else repr(r.h_m),
            ])


@dataclass
class ExtrapolationState:
    """Momentum schedule ``beta_k = (theta_{k-1} - 1) / theta_k``.

    ``theta_{k+1} = (1 + sqrt(1 + 4 theta_k^2)) / 2``; a restart sets
    ``theta_{k-1} = theta_k = 1``.
    """

    theta_prev: float = 1.0
    theta_curr: float = 1.0

    @property
    def beta(self) -> float:
        return (self.theta_prev - 1.0) / self.theta_curr

    def reset(self) -> None:
        self.theta_prev = 1.0
        self.theta_curr = 1.0

    def advance(self) -> None:
        nxt = (1.0 + math.sqrt(1.0 + 4.0 * self.theta_curr ** 2)) / 2.0
        self.theta_prev, self.theta_curr = self.theta_curr, nxt


def _run(p: DcProblem, config: SolverConfig, x0, *, extrapolate: bool,
         f2_at_anchor: bool, method: str) -> SolveResult:
    start = time.perf_counter()
    lam, at_limit = config.resolve_lam(p.smad_constant)
    rho = config.restart_rho
    M = config.resolve_M(lam, rho if extrapolate else 0.0)
    if extrapolate and not p.g_convex:
        raise ConfigurationError(f"{method} requires a convex g")
    warnings = []
    if at_limit:
        warnings.append("lam * L == 1: descent holds only as non-increase")

    h = p.kernel
    period = config.fixed_restart_period
    tol = config.termination_tol
    x = p.check_vector(x0).astype(float, copy=True)
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("x0 must be finite")
    x_prev = x.copy()
    psi = p.objective(x)
    trace = []
    if config.record_trace:
        trace.append(TraceRecord(0, psi, 0.0, 0.0, 0.0, False, psi if M is not None else None))
    state = ExtrapolationState()
    reason = MAX_ITERATIONS
    iterations = 0
    if not math.isfinite(psi):
        reason = NUMERIC_FAILURE
    else:
        for k in range(config.max_iterations):
            beta = 0.0
            fired = False
            y = x
            if extrapolate:
                beta = state.beta
                if beta != 0.0:
                    y = x + beta * (x - x_prev)
                periodic = period is not None and k % period == 0
                if periodic or (beta != 0.0 and h.distance(x, y) > rho * h.distance(x_prev, x)):
                    fired = k > 0 and (periodic or beta != 0.0)
                    state.reset()
                    beta = 0.0
                    y = x
                elif beta != 0.0:
                    assert h.distance(x, y) <= rho * h.distance(x_prev, x)
                state.advance()
            try:
                xi = p.f2_grad(y if f2_at_anchor else x)
                x_new = p.solve_subproblem(y, xi, lam)
            except NumericError:
                reason = NUMERIC_FAILURE
                break
            iterations = k + 1
            if not np.all(np.isfinite(x_new)):
                reason = NUMERIC_FAILURE
                break
            psi_new = p.objective(x_new)
            if not math.isfinite(psi_new):
                reason = NUMERIC_FAILURE
                break
            step = float(np.linalg.norm(x_new - x))
            if config.record_trace:
                gap = h.distance(x, x_new)
                trace.append(TraceRecord(
                    iterations, psi_new, step, gap, beta, fired,
                    None if M is None else psi_new + M * gap,
                    h.distance(x_new, x),
                ))
            x_prev, x, psi = x, x_new, psi_new
            if step / max(1.0, float(np.linalg.norm(x))) <= tol:
                reason = CONVERGED
                break
    return SolveResult(
        final_iterate=x,
        iterations_used=iterations,
        termination_reason=reason,
        trace=trace,
        wall_time=time.perf_counter() - start,
        final_objective=psi,
        lam=lam,
        method=method,
        warnings=warnings,
    )


def run_bpdca(p: DcProblem, config: SolverConfig, x0) -> SolveResult:
    """Bregman proximal DC algorithm.

    ``x^{k+1}`` minimizes ``g(u) + <grad f1(x^k) - xi^k, u - x^k> + D_h(u, x^k) / lam``
    with ``xi^k`` the selected subgradient of ``f2`` at ``x^k``. Stops when
    ``|x^k - x^{k-1}| / max(1, |x^k|) <= termination_tol``.
    """
    return _run(p, config, x0, extrapolate=False, f2_at_anchor=False, method="bpdca")


def run_bpdcae(p: DcProblem, config: SolverConfig, x0) -> SolveResult:
    """Extrapolated variant of :func:`run_bpdca` with adaptive and fixed restarts.

    The anchor is ``y^k = x^k + beta_k (x^k - x^{k-1})``. Momentum is reset
    whenever ``D_h(x^k, y^k) > rho D_h(x^{k-1}, x^k)`` and every
    ``fixed_restart_period`` iterations. The ``f2`` subgradient is still taken
    at ``x^k``.
    """
    return _run(p, config, x0, extrapolate=True, f2_at_anchor=False, method="bpdcae")


def run_bpg(p: DcProblem, config: SolverConfig, x0) -> SolveResult:
    """Bregman proximal gradient on the smooth part ``f1 - f2`` (``f2`` differentiable).

    ``p.smad_constant`` must be an L-smad constant for ``(f1 - f2, h)``.
    """
    return _run(p, config, x0, extrapolate=False, f2_at_anchor=True, method="bpg")


def run_bpge(p: DcProblem, config: SolverConfig, x0) -> SolveResult:
    """:func:`run_bpg` with the same momentum schedule and restart tests as BPDCAe.

    Unlike BPDCAe, the whole smooth part is linearized at the extrapolated point.
    """
    return _run(p, config, x0, extrapolate=True, f2_at_anchor=True, method="bpge")


_SOLVERS = {"bpdca": run_bpdca, "bpdcae": run_bpdcae, "bpg": run_bpg, "bpge": run_bpge}


def solve(p: DcProblem, config: SolverConfig, x0, method: Optional[str] = None) -> SolveResult:
    if method is None:
        method = "bpdcae" if config.extrapolation else "bpdca"
    try:
        runner = _SOLVERS[method]
    except KeyError:
        raise ConfigurationError(f"unknown method {method!r}") from None
    return runner(p, config, x0)


def monitor_auxiliary(trace, M: float, lam: float, rho: float = 0.0) -> np.ndarray:
    """``H_M(x^k, x^{k-1}) = Psi(x^k) + M D_h(x^{k-1}, x^k)`` along a trace."""
    _check_M(M, lam, rho)
    return np.array([r.psi + M * r.bregman_gap for r in trace])


def descent_excess(result: SolveResult, L: float, rel_tol: float = 1e-10) -> np.ndarray:
    """Per-step slack of ``lam Psi(x^{k+1}) <= lam Psi(x^k) - (1 - lam L) D_h(x^{k+1}, x^k)``.

    Entries are ``lhs - rhs - rel_tol * scale``; any positive entry is a violation.
    """
    lam = result.lam
    coef = max(0.0, 1.0 - lam * L)
    out = []
    for prev, cur in zip(result.trace[:-1], result.trace[1:]):
        scale = lam * (1.0 + abs(prev.psi))
        out.append(lam * cur.psi - lam * prev.psi + coef * cur.forward_gap - rel_tol * scale)
    return np.array(out)


def complexity_bound_check(result: SolveResult, L: float, psi_lower: float = 0.0,
                           rho: Optional[float] = None):
    """Check the O(1/n) bound on the smallest Bregman step.

    Without ``rho`` this is the plain-iteration bound
    ``min_k D_h(x^k, x^{k-1}) <= lam (Psi(x^0) - Psi_lb) / (n (1 - lam L))``; with
    ``rho`` it is the extrapolated bound
    ``min_k D_h(x^{k-1}, x^k) <= lam (Psi(x^0) - Psi_lb) / (n (1 - rho))``.
    Returns ``(holds, observed_min, bound)``, or ``None`` when ``lam L = 1``
    makes the plain bound vacuous.
    """
    lam = result.lam
    n = len(result.trace) - 1
    if n < 1:
        return None
    psi0 = result.trace[0].psi
    if rho is None:
        if lam * L >= 1.0 - _LIMIT_RTOL:
            return None
        observed = min(r.forward_gap for r in result.trace[1:])
        bound = lam * (psi0 - psi_lower) / (n * (1.0 - lam * L))
    else:
        observed = min(r.bregman_gap for r in result.trace[1:])
        bound = lam * (psi0 - psi_lower) / (n * (1.0 - rho))
    return observed <= bound, observed, bound
