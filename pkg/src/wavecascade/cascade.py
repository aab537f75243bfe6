"""Sampling and evaluating one stochastic cascade rooted at (x, t).

Each vertex v carries a label (xi_v, tau_v) and draws an offspring count
kappa_v from the branching law.  A vertex with no children contributes

    w(xi_v, tau_v) + tau_v^2 b_0 / 2,      w = v / p_0

and a vertex with kappa children contributes

    tau_v^2 / 2 * b_kappa * (product of its children's values),

with children labelled i.i.d. uniformly in the backward light cone
Delta(xi_v, tau_v) = {(y, s): 0 <= s <= tau_v, |y - xi_v| <= tau_v - s}.

Draw order per vertex is fixed: kappa first, then the (U, V) pair of every
child in child order, then the children are visited depth-first in order.
The traversal uses an explicit stack, so tree depth is bounded by memory,
not by the interpreter's recursion limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .branching import BranchingLaw
from .dalembert import InitialData, QuadratureSpec, homogeneous_solution
from .rng import RngStream


@dataclass(frozen=True)
class SpaceTimePoint:
    x: float
    t: float

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"time must be nonnegative, got {self.t!r}")


@dataclass(frozen=True)
class Caps:
    max_vertices: int = 10**6
    max_generation: int = 10**4

    def __post_init__(self):
        if self.max_vertices <= 0 or self.max_generation <= 0:
            raise ValueError("cascade caps must be positive")


@dataclass(frozen=True)
class CascadeSample:
    """One realisation of the cascade functional.

    When ``truncated`` is set the value is 0 (every unexpanded subtree was
    replaced by 0) and ``unexpanded`` counts the subtrees left open.
    """

    value: float
    vertex_count: int
    max_generation: int
    truncated: bool
    unexpanded: int = 0


@dataclass
class CascadeTree:
    """Materialised tree; vertex ids follow the integer-sequence encoding.

    The root is ``()``, and child ``i`` (1-based) of ``v`` is ``v + (i,)``.
    """

    vertices: list = field(default_factory=list)
    truncated: bool = False

    def to_json(self) -> dict:
        return {
            "truncated": self.truncated,
            "vertices": [
                {"id": list(v["id"]), "xi": v["xi"], "tau": v["tau"],
                 "kappa": v["kappa"], "factor": v["factor"]}
                for v in self.vertices
            ],
        }


def triangle_point(x: float, t: float, u: float, v: float):
    """Map (U, V) in [0,1]^2 to a uniform point of Delta(x, t).

    tau has density 2 (t - tau) / t^2, obtained by inverting its CDF; given
    tau, xi is uniform on [x - (t - tau), x + (t - tau)].
    """
    tau = t * (1.0 - math.sqrt(u))
    half = t - tau
    return x - half + 2.0 * half * v, tau


def sample_triangle(rng: RngStream, apex: SpaceTimePoint) -> SpaceTimePoint:
    if not apex.t > 0:
        raise ValueError("cannot sample the light cone of a point at t = 0")
    u = rng.uniform()
    v = rng.uniform()
    xi, tau = triangle_point(apex.x, apex.t, u, v)
    return SpaceTimePoint(xi, tau)


def sample_offspring(rng: RngStream, law: BranchingLaw) -> int:
    return law.draw(rng.uniform())


def make_leaf(law: BranchingLaw, data: InitialData, quad: QuadratureSpec) -> Callable:
    """Return (xi, tau) -> w(xi, tau) + tau^2 b_0 / 2."""
    p0 = law.p0
    if not p0 > 0:
        raise ValueError("leaf values need p_0 > 0")
    half_b0 = 0.5 * law.b0

    def leaf(xi, tau):
        return homogeneous_solution(data, quad, xi, tau) / p0 + tau * tau * half_b0

    return leaf


def leaf_value(data: InitialData, law: BranchingLaw, quad: QuadratureSpec,
               point: SpaceTimePoint) -> float:
    return make_leaf(law, data, quad)(point.x, point.t)


class ContainmentError(AssertionError):
    pass


def _run(rng, law, leaf, x, t, max_vertices, max_generation,
         cutoff=None, boundary=None, record=None, check=False):
    """Shared traversal.  Returns (value, vertex_count, max_gen, truncated, unexpanded).

    ``leaf`` may be None when only the tree shape is wanted; ``cutoff``
    turns generation-``cutoff`` vertices into boundary leaves valued by
    ``boundary(xi, tau)``; ``record`` collects vertex dicts in visit order.
    """
    draw = law.draw
    weights = law.b
    uniform = rng.uniform
    sqrt = math.sqrt

    count = 1
    deepest = 0
    stack = []
    # pending child to visit: (xi, tau, generation, id)
    cur = (x, t, 0, ())
    result = None
    while True:
        if cur is not None:
            xi, tau, gen, vid = cur
            cur = None
            if gen == cutoff:
                value = boundary(xi, tau)
                if record is not None:
                    record.append({"id": vid, "xi": xi, "tau": tau, "kappa": None,
                                   "factor": value})
                result = value
            else:
                kappa = draw(uniform())
                if kappa == 0:
                    value = leaf(xi, tau) if leaf is not None else None
                    if record is not None:
                        record.append({"id": vid, "xi": xi, "tau": tau, "kappa": 0,
                                       "factor": value})
                    result = value if value is not None else 0.0
                else:
                    factor = 0.5 * tau * tau * weights[kappa]
                    if record is not None:
                        record.append({"id": vid, "xi": xi, "tau": tau, "kappa": kappa,
                                       "factor": factor})
                    if gen + 1 > max_generation or count + kappa > max_vertices:
                        unexpanded = 1 + sum(len(f[1]) - f[2] for f in stack)
                        return 0.0, count, deepest, True, unexpanded
                    children = []
                    for _ in range(kappa):
                        u = uniform()
                        w = uniform()
                        ctau = tau * (1.0 - sqrt(u))
                        half = tau - ctau
                        cxi = xi - half + 2.0 * half * w
                        if check and not (ctau <= tau and abs(cxi - xi) <= half * (1 + 1e-12)):
                            raise ContainmentError(
                                f"child ({cxi}, {ctau}) outside the cone of ({xi}, {tau})")
                        children.append((cxi, ctau))
                    count += kappa
                    if gen + 1 > deepest:
                        deepest = gen + 1
                    # frame: [accumulated product, children, next index, gen, id]
                    stack.append([factor, children, 0, gen, vid])
        if result is not None:
            if not stack:
                return result, count, deepest, False, 0
            stack[-1][0] *= result
            result = None
        frame = stack[-1]
        i = frame[2]
        if i < len(frame[1]):
            frame[2] = i + 1
            cxi, ctau = frame[1][i]
            cur = (cxi, ctau, frame[3] + 1, frame[4] + (i + 1,) if record is not None else ())
        else:
            stack.pop()
            result = frame[0]


def evaluate_cascade(rng: RngStream, law: BranchingLaw, data: InitialData,
                     quad: QuadratureSpec, root: SpaceTimePoint,
                     caps: Caps = Caps(), *, leaf=None, check=False) -> CascadeSample:
    """Sample one cascade and evaluate its untruncated functional.

    ``leaf`` lets callers pass a prebuilt :func:`make_leaf` closure in hot
    loops; ``check`` asserts light-cone containment on every draw.
    """
    if not root.t > 0:
        raise ValueError("cascade root must have t > 0")
    if leaf is None:
        leaf = make_leaf(law, data, quad)
    value, count, deepest, truncated, unexpanded = _run(
        rng, law, leaf, root.x, root.t, caps.max_vertices, caps.max_generation, check=check)
    return CascadeSample(value, count, deepest, truncated, unexpanded)


def evaluate_truncated(rng: RngStream, law: BranchingLaw, data: InitialData,
                       quad: QuadratureSpec, root: SpaceTimePoint, n: int,
                       boundary: Callable[[float, float], float], *, leaf=None) -> float:
    """Generation-``n`` functional: vertices of generation n are valued by ``boundary``."""
    if n < 0:
        raise ValueError("generation bound must be >= 0")
    if n == 0:
        return boundary(root.x, root.t)
    if not root.t > 0:
        raise ValueError("cascade root must have t > 0")
    if leaf is None:
        leaf = make_leaf(law, data, quad)
    # caps cannot bind: the generation bound keeps every tree finite
    value, *_ = _run(rng, law, leaf, root.x, root.t, math.inf, math.inf,
                     cutoff=n, boundary=boundary)
    return value


def cascade_shape(rng: RngStream, law: BranchingLaw, root: SpaceTimePoint,
                  caps: Caps = Caps()) -> CascadeSample:
    """Same draws as :func:`evaluate_cascade` but skips leaf evaluation (value is 0)."""
    if not root.t > 0:
        raise ValueError("cascade root must have t > 0")
    _, count, deepest, truncated, unexpanded = _run(
        rng, law, None, root.x, root.t, caps.max_vertices, caps.max_generation)
    return CascadeSample(0.0, count, deepest, truncated, unexpanded)


def sample_tree(rng: RngStream, law: BranchingLaw, root: SpaceTimePoint,
                caps: Caps = Caps(), data: Optional[InitialData] = None,
                quad: QuadratureSpec = QuadratureSpec()) -> CascadeTree:
    """Materialise one labelled tree.

    Uses the same draws as :func:`evaluate_cascade` under the same stream
    key.  Leaf factors are filled in only when ``data`` is given.
    """
    if not root.t > 0:
        raise ValueError("cascade root must have t > 0")
    leaf = make_leaf(law, data, quad) if data is not None else None
    record = []
    _, _, _, truncated, _ = _run(rng, law, leaf, root.x, root.t, caps.max_vertices,
                                 caps.max_generation, record=record)
    return CascadeTree(record, truncated)
