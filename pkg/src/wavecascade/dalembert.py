"""Homogeneous wave solution v(x,t) from initial data (d'Alembert formula).

    v(x,t) = 1/2 * int_{x-t}^{x+t} psi(y) dy + 1/2 * (phi(x+t) + phi(x-t))

The integral is computed by adaptive bisection with an embedded
Gauss-Kronrod 7/15 pair per panel.  The integrator is vectorised over many
intervals at once so the Picard oracle can evaluate v on a whole grid in a
handful of numpy passes; the scalar path goes through the same code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BoundViolation, QuadratureError
from .expr import Expression, parse

# Kronrod 15-point abscissae (descending, last is the centre) and weights,
# with the embedded 7-point Gauss weights on every other abscissa.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric node set in [-1, 1] and matching weight vectors
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_g = np.zeros(15)
_g[1:7:2] = _WG[:3]
_g[7] = _WG[3]
_g[9:15:2] = _WG[2::-1]
GAUSS_WEIGHTS = _g

# hard ceiling on total panels per call, guards against pathological integrands
_MAX_PANELS = 2_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    tol: float = 1e-10
    max_depth: int = 40

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("quadrature tol must be positive")
        if self.max_depth < 0:
            raise ValueError("quadrature max_depth must be >= 0")


@dataclass(frozen=True)
class InitialData:
    """Initial displacement ``phi`` and velocity ``psi`` with optional sup bounds."""

    phi: Expression
    psi: Expression
    sup_phi: Optional[float] = None
    sup_psi: Optional[float] = None

    def __post_init__(self):
        for name in ("sup_phi", "sup_psi"):
            val = getattr(self, name)
            if val is not None and not val >= 0:
                raise ValueError(f"{name} must be a nonnegative real")
        c = self.psi.constant_value()
        if c is not None and self.sup_psi is not None:
            _check_bound("psi", abs(c), self.sup_psi)

    @property
    def has_bounds(self) -> bool:
        return self.sup_phi is not None and self.sup_psi is not None


def initial_data(phi: str, psi: str = "0", sup_phi=None, sup_psi=None) -> InitialData:
    return InitialData(parse(phi), parse(psi), sup_phi, sup_psi)


def _check_bound(name, value, bound):
    if bound is not None and value > bound * (1 + 1e-14):
        raise BoundViolation(f"|{name}| = {value!r} exceeds its declared sup bound {bound!r}")


def integrate_many(f: Expression, a, b, q: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Integrate ``f`` over each interval [a_i, b_i] to absolute tolerance ``q.tol``.

    Each interval's tolerance budget is split across its panels in proportion
    to panel width, so the summed error estimate of an interval stays below
    ``q.tol``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    if np.any(b < a):
        raise ValueError("integration bounds must satisfy a <= b")
    out = np.zeros(a.shape)
    if a.size == 0:
        return out

    c = f.constant_value()
    if c is not None:
        return c * (b - a)

    flat_out = out.reshape(-1)
    lo = a.reshape(-1).copy()
    hi = b.reshape(-1).copy()
    owner = np.arange(lo.size)
    budget = np.full(lo.size, q.tol)
    depth = 0
    panels_seen = 0
    while lo.size:
        panels_seen += lo.size
        if panels_seen > _MAX_PANELS:
            raise QuadratureError(f"adaptive quadrature exceeded {_MAX_PANELS} panels")
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        y = f.vectorized(mid[:, None] + half[:, None] * NODES[None, :])
        kron = half * (y @ KRONROD_WEIGHTS)
        gauss = half * (y @ GAUSS_WEIGHTS)
        err = np.abs(kron - gauss)
        done = err <= budget
        # fixed owner order keeps the summation deterministic
        np.add.at(flat_out, owner[done], kron[done])
        if np.all(done):
            break
        if depth >= q.max_depth:
            worst = float(np.max(err[~done]))
            raise QuadratureError(
                f"quadrature did not reach tol {q.tol:g} within max_depth {q.max_depth} "
                f"(worst panel error estimate {worst:.3g})")
        lo, hi, owner, budget, mid = lo[~done], hi[~done], owner[~done], budget[~done], mid[~done]
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        owner = np.concatenate([owner, owner])
        budget = np.concatenate([budget, budget]) * 0.5
        depth += 1
    return out


def integrate(f: Expression, a: float, b: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    if b < a:
        raise ValueError("integration bounds must satisfy a <= b")
    return float(integrate_many(f, a, b, q)[0])


def homogeneous_solution(d: InitialData, q: QuadratureSpec, x: float, t: float) -> float:
    if t < 0:
        raise ValueError("homogeneous_solution needs t >= 0")
    fp = d.phi(x + t)
    fm = d.phi(x - t)
    if d.sup_phi is not None:
        _check_bound("phi", max(abs(fp), abs(fm)), d.sup_phi)
    c = d.psi.constant_value()
    if c is not None:
        drift = c * (2.0 * t)
    else:
        if d.sup_psi is not None:
            _check_bound("psi", max(abs(d.psi(x - t)), abs(d.psi(x + t))), d.sup_psi)
        drift = float(integrate_many(d.psi, x - t, x + t, q)[0])
    return 0.5 * drift + 0.5 * (fp + fm)


def homogeneous_solution_many(d: InitialData, q: QuadratureSpec, x, t) -> np.ndarray:
    """Vectorised v(x,t) over broadcast arrays ``x`` and ``t``."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("homogeneous_solution needs t >= 0")
    fp = d.phi.vectorized(x + t)
    fm = d.phi.vectorized(x - t)
    if d.sup_phi is not None and fp.size:
        _check_bound("phi", float(max(np.max(np.abs(fp)), np.max(np.abs(fm)))), d.sup_phi)
    drift = integrate_many(d.psi, x - t, x + t, q)
    if d.sup_psi is not None and d.psi.depends_on_x and x.size:
        ends = np.abs(d.psi.vectorized(np.concatenate([(x - t).ravel(), (x + t).ravel()])))
        _check_bound("psi", float(np.max(ends)), d.sup_psi)
    return 0.5 * drift + 0.5 * (fp + fm)


def sup_bound_v(d: InitialData, t: float) -> float:
    """Upper bound sup_phi + t*sup_psi on sup_x |v(x,t)|."""
    if not d.has_bounds:
        raise ValueError("sup_bound_v needs both sup_phi and sup_psi")
    return d.sup_phi + t * d.sup_psi
