"""Real-valued phase retrieval ``<a_r, x>^2 ~ b_r`` with an l1 regularizer.

The fidelity ``1/4 sum_r (<a_r, x>^2 - b_r)^2`` is split as ``f1 - f2`` with

    f1(x) = 1/4 sum_r <a_r, x>^4 + 1/4 |b|^2,   f2(x) = 1/2 sum_r b_r <a_r, x>^2,

and ``g = theta |x|_1``. Three L-smad constants are available: ``"bpg"`` for
``(f1 - f2, quartic-quad)``, ``"dc-sum"`` for ``(f1, quartic)`` and the
high-probability Gaussian-model bound ``"gaussian"``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .kernels import KernelFunction
from .problem import DcProblem
from .solvers import CONVERGED, MAX_ITERATIONS, NUMERIC_FAILURE, SolveResult, SolverConfig, TraceRecord

__all__ = [
    "BOUNDS",
    "PhaseRetrievalInstance",
    "accuracy_metric",
    "closed_form_subproblem",
    "default_start",
    "f1_eval",
    "f1_grad",
    "f2_eval",
    "f2_grad",
    "fidelity",
    "generate_gaussian_instance",
    "l_bound",
    "l_bound_bpg",
    "l_bound_dc_sum",
    "l_bound_gaussian",
    "load_instance",
    "make_problem",
    "objective",
    "positive_cubic_root",
    "relative_error",
    "run_wirtinger_flow",
    "save_instance",
    "soft_threshold",
    "spectral_initialization",
    "spectral_norm",
]

BOUNDS = ("bpg", "dc-sum", "gaussian")

# objective value beyond which Wirtinger flow is declared divergent
_DIVERGENCE = 1e30


@dataclass(frozen=True, eq=False)
class PhaseRetrievalInstance:
    """Sensing matrix ``A`` (rows ``a_r``), measurements ``b``, ground truth and weight."""

    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    theta_reg: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        x_true = np.array(self.x_true, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ConfigurationError(f"A must be a nonempty m x d matrix, got shape {A.shape}")
        if b.shape != (A.shape[0],) or x_true.shape != (A.shape[1],):
            raise ConfigurationError("b must have length m and x_true length d")
        if self.theta_reg < 0:
            raise ConfigurationError("theta_reg must be nonnegative")
        for arr in (A, b, x_true):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x_true", x_true)
        object.__setattr__(self, "theta_reg", float(self.theta_reg))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def with_theta(self, theta_reg: float) -> "PhaseRetrievalInstance":
        return PhaseRetrievalInstance(self.A, self.b, self.x_true, theta_reg, self.seed)


def generate_gaussian_instance(m: int, d: int, sparsity: float = 0.05, theta_reg: float = 1.0,
                               seed: int = 0) -> PhaseRetrievalInstance:
    """Draw a noiseless Gaussian-model instance.

    ``A`` has i.i.d. standard normal entries; ``x_true`` has ``ceil(sparsity * d)``
    standard normal entries at uniformly chosen positions; ``b_r = <a_r, x_true>^2``.
    """
    if m < 1 or d < 1:
        raise ConfigurationError("m and d must be >= 1")
    if not 0.0 < sparsity <= 1.0:
        raise ConfigurationError(f"sparsity must lie in (0, 1], got {sparsity}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, d))
    # round first so that e.g. 0.05 * 60 does not ceil to 4
    nnz = max(1, math.ceil(round(sparsity * d, 9)))
    support = rng.choice(d, size=nnz, replace=False)
    x_true = np.zeros(d)
    x_true[support] = rng.standard_normal(nnz)
    b = (A @ x_true) ** 2
    return PhaseRetrievalInstance(A, b, x_true, theta_reg, seed)


def default_start(inst: PhaseRetrievalInstance, seed: Optional[int] = None) -> np.ndarray:
    """Standard normal starting point on a stream separate from the instance draw."""
    base = inst.seed if seed is None else seed
    return np.random.default_rng([0 if base is None else int(base), 1]).standard_normal(inst.d)


def _check_x(inst, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.d,):
        raise ValueError(f"expected a vector of shape ({inst.d},), got {x.shape}")
    return x


def f1_eval(inst: PhaseRetrievalInstance, x) -> float:
    sq = (inst.A @ _check_x(inst, x)) ** 2
    return float(0.25 * (sq @ sq) + 0.25 * (inst.b @ inst.b))


def f1_grad(inst: PhaseRetrievalInstance, x) -> np.ndarray:
    Ax = inst.A @ _check_x(inst, x)
    return inst.A.T @ (Ax * Ax * Ax)


def f2_eval(inst: PhaseRetrievalInstance, x) -> float:
    Ax = inst.A @ _check_x(inst, x)
    return float(0.5 * (inst.b @ Ax ** 2))


def f2_grad(inst: PhaseRetrievalInstance, x) -> np.ndarray:
    Ax = inst.A @ _check_x(inst, x)
    return inst.A.T @ (inst.b * Ax)


def fidelity(inst: PhaseRetrievalInstance, x) -> float:
    """``1/4 sum_r (<a_r, x>^2 - b_r)^2`` evaluated directly (no cancellation)."""
    res = (inst.A @ _check_x(inst, x)) ** 2 - inst.b
    return float(0.25 * (res @ res))


def objective(inst: PhaseRetrievalInstance, x) -> float:
    x = _check_x(inst, x)
    return fidelity(inst, x) + inst.theta_reg * float(np.abs(x).sum())


def spectral_norm(M, tol: float = 1e-8, max_iter: int = 10000, seed: int = 0):
    """Largest eigenvalue and unit eigenvector of a symmetric PSD matrix by power iteration.

    The start vector is drawn from ``seed`` so results are reproducible.
    Stops when the Rayleigh quotient changes by less than ``tol`` relatively.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    value = float(v @ M @ v)
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v
        v = w / nw
        new = float(v @ M @ v)
        if abs(new - value) <= tol * abs(new):
            return new, v
        value = new
    raise NumericError(f"power iteration did not converge in {max_iter} iterations")


def l_bound_bpg(inst: PhaseRetrievalInstance) -> float:
    """``sum_r (3 |a_r|^4 + |a_r|^2 |b_r|)``, the constant for ``(f1 - f2, quartic-quad)``."""
    sq = np.einsum("ij,ij->i", inst.A, inst.A)
    return float(np.sum(3.0 * sq ** 2 + sq * np.abs(inst.b)))


def l_bound_dc_sum(inst: PhaseRetrievalInstance) -> float:
    """``3 || sum_r |a_r|^2 a_r a_r^T ||``, the constant for ``(f1, quartic)``."""
    sq = np.einsum("ij,ij->i", inst.A, inst.A)
    value, _ = spectral_norm((inst.A.T * sq) @ inst.A)
    return 3.0 * value


def l_bound_gaussian(inst: PhaseRetrievalInstance, delta: float = 0.0) -> float:
    """``9 || sum_r a_r a_r^T || + delta``; valid with high probability for Gaussian ``A``."""
    if delta < 0:
        raise ConfigurationError("delta must be nonnegative")
    value, _ = spectral_norm(inst.A.T @ inst.A)
    return 9.0 * value + delta


def l_bound(inst: PhaseRetrievalInstance, bound: str, delta: float = 0.0) -> float:
    if bound == "bpg":
        return l_bound_bpg(inst)
    if bound == "dc-sum":
        return l_bound_dc_sum(inst)
    if bound == "gaussian":
        return l_bound_gaussian(inst, delta)
    raise ConfigurationError(f"unknown bound {bound!r}; expected one of {BOUNDS}")


def soft_threshold(c, tau: float) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.sign(c) * np.maximum(np.abs(c) - tau, 0.0)


def positive_cubic_root(n: float) -> float:
    """Unique real root ``t >= 0`` of ``t^3 + t = n`` for ``n >= 0``."""
    if n <= 0.0:
        return 0.0
    disc = math.sqrt(n * n / 4.0 + 1.0 / 27.0)
    t = np.cbrt(n / 2.0 + disc) + np.cbrt(n / 2.0 - disc)
    t = max(float(t), 0.0)
    # Cardano loses digits for small n; a few Newton steps restore them
    for _ in range(6):
        f = t * t * t + t - n
        t_new = t - f / (3.0 * t * t + 1.0)
        if t_new == t:
            break
        t = t_new
    return t


def closed_form_subproblem(c, tau: float, kernel_kind: str) -> np.ndarray:
    """Minimize ``tau |y|_1 + h(y) - <c, y>`` for ``h`` quartic or quartic-quad.

    The minimizer points along ``s = soft_threshold(c, tau)`` with radius ``t``
    solving ``t^3 = |s|`` (quartic) or ``t^3 + t = |s|`` (quartic-quad).
    """
    if tau < 0:
        raise ConfigurationError("tau must be nonnegative")
    kind = KernelFunction(kernel_kind, 1).kind
    s = soft_threshold(c, tau)
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        return np.zeros_like(s)
    if kind == "quartic":
        t = float(np.cbrt(norm))
    elif kind == "quartic-quad":
        t = positive_cubic_root(norm)
    else:
        raise ConfigurationError("closed_form_subproblem needs a quartic-type kernel")
    return (t / norm) * s


def make_problem(inst: PhaseRetrievalInstance, kernel: str = "quartic",
                 bound: Union[str, float] = "gaussian", delta: float = 0.0) -> DcProblem:
    """Bind an instance to a kernel and L constant, with the closed-form subproblem.

    Use ``kernel="quartic"`` with ``"dc-sum"``/``"gaussian"`` for the DC methods,
    and ``kernel="quartic-quad"`` with ``"bpg"`` for the BPG baselines.
    ``"sq-euclid"`` gives a proximal-gradient step but no shipped L bound fits it.
    """
    h = KernelFunction(kernel, inst.d)
    L = float(bound) if isinstance(bound, (int, float)) else l_bound(inst, bound, delta)
    theta = inst.theta_reg
    A, b = inst.A, inst.b

    def f1_value(x):
        return f1_eval(inst, x)

    def f1_gradient(x):
        Ax = A @ x
        return A.T @ (Ax * Ax * Ax)

    def f2_value(x):
        return f2_eval(inst, x)

    def f2_subgradient(x):
        return A.T @ (b * (A @ x))

    def g_value(x):
        return theta * float(np.abs(x).sum())

    def g_prox(v, t):
        return soft_threshold(v, t * theta)

    def subproblem(p, anchor, xi, lam):
        grad = f1_gradient(anchor) - xi
        if not np.all(np.isfinite(grad)):
            raise NumericError("non-finite gradient in subproblem")
        if h.kind == "sq-euclid":
            return soft_threshold(anchor - lam * grad, lam * theta)
        c = h.gradient(anchor) - lam * grad
        return closed_form_subproblem(c, lam * theta, h.kind)

    return DcProblem(
        dimension=inst.d,
        f1_value=f1_value,
        f1_gradient=f1_gradient,
        kernel=h,
        smad_constant=L,
        f2_value=f2_value,
        f2_subgradient=f2_subgradient,
        g_value=g_value,
        g_prox=g_prox,
        g_convex=True,
        subproblem=subproblem,
        objective_value=lambda x: objective(inst, x),
        lower_bound=0.0,
        name=f"phase-retrieval(m={inst.m}, d={inst.d}, bound={bound})",
    )


def spectral_initialization(inst: PhaseRetrievalInstance) -> np.ndarray:
    """Wirtinger-flow initial point ``sqrt(d sum b / sum |a_r|^2) v``.

    ``v`` is the leading unit eigenvector of ``(1/m) sum_r b_r a_r a_r^T`` with its
    largest-magnitude entry made positive.
    """
    A, b = inst.A, inst.b
    if not np.any(b):
        warnings.warn("all measurements are zero; spectral initialization is 0", RuntimeWarning)
        return np.zeros(inst.d)
    Y = (A.T * b) @ A / inst.m
    _, v = spectral_norm(Y)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    scale = math.sqrt(inst.d * float(b.sum()) / float(np.einsum("ij,ij->i", A, A).sum()))
    return scale * v


def run_wirtinger_flow(inst: PhaseRetrievalInstance, config: Optional[SolverConfig] = None,
                       x0=None, mu_max: float = 0.2, k0: float = 330.0) -> SolveResult:
    """Gradient descent on the (1/m-normalized) fidelity with a ramped step.

    ``x^{k+1} = x^k - mu_k / |x^0|^2 * (1/m) sum_r (<a_r,x>^2 - b_r) <a_r,x> a_r`` with
    ``mu_k = min(1 - exp(-(k+1)/k0), mu_max)``. The default ``mu_max`` is lower than
    the complex-valued reference value since the real-valued curvature is larger.
    """
    config = config or SolverConfig()
    if inst.theta_reg != 0.0:
        raise ConfigurationError("Wirtinger flow requires theta_reg = 0")
    start = time.perf_counter()
    x = spectral_initialization(inst) if x0 is None else _check_x(inst, x0).astype(float, copy=True)
    A, b, m = inst.A, inst.b, inst.m
    norm0 = float(x @ x)
    psi = fidelity(inst, x)
    trace = [TraceRecord(0, psi, 0.0, 0.0, 0.0, False)] if config.record_trace else []
    reason = MAX_ITERATIONS
    iterations = 0
    if norm0 == 0.0:
        # gradient vanishes at zero; nothing to do
        reason = CONVERGED
    for k in range(config.max_iterations if norm0 > 0 else 0):
        mu = min(1.0 - math.exp(-(k + 1) / k0), mu_max)
        Ax = A @ x
        grad = A.T @ ((Ax ** 2 - b) * Ax) / m
        x_new = x - (mu / norm0) * grad
        iterations = k + 1
        psi_new = fidelity(inst, x_new) if np.all(np.isfinite(x_new)) else math.inf
        if not psi_new <= _DIVERGENCE:
            reason = NUMERIC_FAILURE
            break
        step = float(np.linalg.norm(x_new - x))
        if config.record_trace:
            trace.append(TraceRecord(iterations, psi_new, step, 0.0, 0.0, False))
        x, psi = x_new, psi_new
        if step / max(1.0, float(np.linalg.norm(x))) <= config.termination_tol:
            reason = CONVERGED
            break
    return SolveResult(x, iterations, reason, trace, time.perf_counter() - start, psi,
                       lam=0.0, method="wf")


def relative_error(inst: PhaseRetrievalInstance, x_hat) -> float:
    """``min_s |s x_hat - x_true| / |x_true|`` over the global sign ``s = +-1``."""
    x_hat = _check_x(inst, x_hat)
    denom = float(np.linalg.norm(inst.x_true))
    err = min(np.linalg.norm(x_hat - inst.x_true), np.linalg.norm(x_hat + inst.x_true))
    return float(err) / denom


def accuracy_metric(inst: PhaseRetrievalInstance, x_hat) -> float:
    """``log10 |Psi(x_hat) - Psi(x_true)|``; ``-inf`` when the two agree exactly."""
    gap = abs(objective(inst, x_hat) - objective(inst, inst.x_true))
    return -math.inf if gap == 0.0 else math.log10(gap)


def save_instance(inst: PhaseRetrievalInstance, path) -> None:
    """Write a text instance file: header ``m,d,theta_reg,seed``, then ``A`` row-major, ``b``, ``x_true``."""
    with open(path, "w") as fh:
        fh.write("# m,d,theta_reg,seed\n")
        fh.write(f"{inst.m},{inst.d},{inst.theta_reg!r},{'' if inst.seed is None else inst.seed}\n")
        for row in inst.A:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
        fh.write(",".join(repr(float(v)) for v in inst.b) + "\n")
        fh.write(",".join(repr(float(v)) for v in inst.x_true) + "\n")


def load_instance(path) -> PhaseRetrievalInstance:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    m_s, d_s, theta_s, seed_s = lines[0].split(",")
    m, d = int(m_s), int(d_s)
    if len(lines) != m + 3:
        raise ConfigurationError(f"instance file has {len(lines)} data lines, expected {m + 3}")
    A = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:m + 1]])
    b = np.array([float(v) for v in lines[m + 1].split(",")])
    x_true = np.array([float(v) for v in lines[m + 2].split(",")])
    if A.shape != (m, d):
        raise ConfigurationError("instance file matrix does not match its header")
    return PhaseRetrievalInstance(A, b, x_true, float(theta_s), int(seed_s) if seed_s else None)
