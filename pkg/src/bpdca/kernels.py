"""Kernel generating distances and the Bregman distances they induce.

Three kernels are provided, all with full domain:

* ``"sq-euclid"``:    h(x) = 1/2 |x|^2
* ``"quartic"``:      h(x) = 1/4 |x|^4  (strictly, not strongly, convex)
* ``"quartic-quad"``: h(x) = 1/4 |x|^4 + 1/2 |x|^2
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import ConfigurationError

__all__ = [
    "KERNEL_KINDS",
    "KernelFunction",
    "SmadReport",
    "bregman_distance",
    "kernel_gradient",
    "kernel_value",
    "make_kernel",
    "smad_certificate",
]

KERNEL_KINDS = ("sq-euclid", "quartic", "quartic-quad")

_ALIASES = {
    "sq-euclid": "sq-euclid",
    "squared-euclidean": "sq-euclid",
    "quartic": "quartic",
    "quartic-quad": "quartic-quad",
    "quartic-plus-quadratic": "quartic-quad",
}

# relative size below which a negative Bregman distance is treated as round-off
_CLAMP_RTOL = 1e-12


@dataclass(frozen=True)
class KernelFunction:
    """A kernel generating distance of a given kind on R^d.

    Parameters
    ----------
    kind : str
        One of ``"sq-euclid"``, ``"quartic"``, ``"quartic-quad"``.
    dimension : int
        Dimension ``d`` of the underlying space.
    """

    kind: str
    dimension: int
    strongly_convex: bool = field(init=False)

    def __post_init__(self):
        try:
            kind = _ALIASES[self.kind]
        except KeyError:
            raise ConfigurationError(
                f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}"
            ) from None
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {self.dimension}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "strongly_convex", kind != "quartic")

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"expected a vector of shape ({self.dimension},), got {x.shape}"
            )
        return x

    def value(self, x) -> float:
        x = self._check(x)
        sq = float(x @ x)
        if self.kind == "sq-euclid":
            return 0.5 * sq
        if self.kind == "quartic":
            return 0.25 * sq * sq
        return 0.25 * sq * sq + 0.5 * sq

    def gradient(self, x) -> np.ndarray:
        x = self._check(x)
        sq = float(x @ x)
        if self.kind == "sq-euclid":
            return x.copy()
        if self.kind == "quartic":
            return sq * x
        return (sq + 1.0) * x

    def distance(self, x, y) -> float:
        """Bregman distance ``D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>``."""
        x = self._check(x)
        y = self._check(y)
        if self.kind == "sq-euclid":
            diff = x - y
            return 0.5 * float(diff @ diff)
        hx = self.value(x)
        hy = self.value(y)
        dist = hx - hy - float(self.gradient(y) @ (x - y))
        if dist < 0.0 and -dist <= _CLAMP_RTOL * (1.0 + abs(hx) + abs(hy)):
            return 0.0
        return dist

    __call__ = value


def make_kernel(kind: str, dimension: int) -> KernelFunction:
    return KernelFunction(kind, dimension)


def kernel_value(h: KernelFunction, x) -> float:
    return h.value(x)


def kernel_gradient(h: KernelFunction, x) -> np.ndarray:
    return h.gradient(x)


def bregman_distance(h: KernelFunction, x, y) -> float:
    return h.distance(x, y)


@dataclass
class SmadReport:
    """Outcome of a sampled relative-smoothness check.

    ``ratios[i]`` is ``|D_f(x_i, y_i)| / (L * D_h(x_i, y_i))`` (``inf`` when the
    kernel gap vanishes but the function gap does not).
    """

    passed: np.ndarray
    ratios: np.ndarray
    worst_ratio: float

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    @property
    def n_violations(self) -> int:
        return int(np.size(self.passed) - np.count_nonzero(self.passed))


def smad_certificate(
    f_value: Callable[[np.ndarray], float],
    f_gradient: Callable[[np.ndarray], np.ndarray],
    h: KernelFunction,
    L: float,
    sample_points: Sequence[tuple[np.ndarray, np.ndarray]],
    tol: float = 1e-9,
) -> SmadReport:
    """Check ``|f(x) - f(y) - <grad f(y), x - y>| <= L D_h(x, y)`` on sample pairs.

    This is a necessary condition for the pair ``(f, h)`` to be L-smad, not a
    proof of it. ``tol`` is relative to the magnitude of the values involved.
    """
    if not L > 0:
        raise ConfigurationError(f"L must be positive, got {L}")
    passed = []
    ratios = []
    for x, y in sample_points:
        x = h._check(x)
        y = h._check(y)
        fx = f_value(x)
        fy = f_value(y)
        gap = abs(fx - fy - float(np.dot(f_gradient(y), x - y)))
        bound = L * h.distance(x, y)
        slack = tol * (1.0 + abs(fx) + abs(fy))
        passed.append(gap <= bound + slack)
        if bound > 0:
            ratios.append(gap / bound)
        else:
            ratios.append(0.0 if gap <= slack else np.inf)
    ratios = np.asarray(ratios, dtype=float)
    worst = float(ratios.max()) if ratios.size else 0.0
    return SmadReport(np.asarray(passed, dtype=bool), ratios, worst)
