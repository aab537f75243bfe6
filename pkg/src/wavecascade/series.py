"""Truncated power series for the nonlinearity F(u) = sum_k a_k u^k."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("exp", "sin", "cos", "geometric")


def _family_coefficient(name: str, k: int) -> float:
    if name == "exp":
        return 1.0 / math.factorial(k)
    if name == "sin":
        if k % 2 == 0:
            return 0.0
        return (-1.0) ** ((k - 1) // 2) / math.factorial(k)
    if name == "cos":
        if k % 2 == 1:
            return 0.0
        return (-1.0) ** (k // 2) / math.factorial(k)
    if name == "geometric":
        # 1/(1-u); the untruncated series only converges for |scale*u| < 1
        return 1.0
    raise ValueError(f"unknown series family {name!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class PowerSeries:
    """F(u) truncated at order K = len(coefficients) - 1.

    ``kind`` is ``"poly"`` for explicit coefficients or ``"named"`` for an
    expanded Taylor family, in which case ``name`` and ``scale`` record how
    the coefficients were produced.
    """

    coefficients: tuple
    kind: str = "poly"
    name: str | None = None
    scale: float = 1.0
    support: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coefficients)
        if not coeffs:
            raise ValueError("a power series needs at least one coefficient (order K >= 0)")
        if not all(math.isfinite(a) for a in coeffs):
            raise ValueError("power series coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "support",
                           frozenset(k for k, a in enumerate(coeffs) if a != 0.0))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def coefficient(self, k: int) -> float:
        if k < 0:
            raise ValueError("coefficient index must be nonnegative")
        return self.coefficients[k] if k < len(self.coefficients) else 0.0

    def __call__(self, u):
        # Horner; works for floats and numpy arrays alike
        acc = self.coefficients[-1]
        for a in reversed(self.coefficients[:-1]):
            acc = acc * u + a
        if isinstance(u, np.ndarray) and np.ndim(acc) == 0:
            acc = np.full(u.shape, acc)
        return acc

    def evaluate(self, u):
        return self(u)


def poly(coefficients) -> PowerSeries:
    return PowerSeries(tuple(coefficients), kind="poly")


def from_named(name: str, scale: float = 1.0, order: int = 12) -> PowerSeries:
    """Taylor expansion of ``family(scale*u)`` truncated at ``order``.

    The truncation error is the caller's concern: for exp/sin/cos it is
    bounded by the first omitted term times e^|scale*u|; for geometric the
    series diverges once |scale*u| >= 1.
    """
    if name not in FAMILIES:
        raise ValueError(f"unknown series family {name!r}; expected one of {FAMILIES}")
    if order < 0:
        raise ValueError("truncation order must be >= 0")
    coeffs = tuple(_family_coefficient(name, k) * scale ** k for k in range(order + 1))
    return PowerSeries(coeffs, kind="named", name=name, scale=float(scale))


def coefficient(s: PowerSeries, k: int) -> float:
    return s.coefficient(k)


def evaluate(s: PowerSeries, u):
    return s(u)
