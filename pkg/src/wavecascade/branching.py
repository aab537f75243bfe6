"""Offspring law p_k, weights b_k = a_k / p_k, b* and the horizon T*."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .dalembert import InitialData, sup_bound_v
from .errors import BranchingError
from .series import PowerSeries

SUM_TOL = 1e-12


@dataclass(frozen=True)
class BranchingLaw:
    """Validated offspring law together with its cascade weights.

    ``p`` and ``b`` map offspring counts to probabilities and weights.  Only
    counts with p_k > 0 appear in ``outcomes``/``cumulative``, which form the
    inverse-CDF table used by the sampler.
    """

    p: dict
    b: dict
    mean_offspring: float
    b_star: float
    outcomes: tuple
    cumulative: tuple

    @property
    def p0(self) -> float:
        return self.p.get(0, 0.0)

    @property
    def b0(self) -> float:
        return self.b.get(0, 0.0)

    def draw(self, u: float) -> int:
        """Offspring count for a uniform ``u`` in [0, 1)."""
        return self.outcomes[bisect.bisect_right(self.cumulative, u)]


def _finish(p: dict, series: PowerSeries) -> BranchingLaw:
    keys = sorted(set(p) | series.support)
    b = {}
    for k in keys:
        pk = p.get(k, 0.0)
        b[k] = series.coefficient(k) / pk if pk > 0 else 0.0
    mean = math.fsum(k * pk for k, pk in p.items())
    b_star = max((abs(bk) for k, bk in b.items() if k >= 1), default=0.0)
    outcomes = tuple(k for k in sorted(p) if p[k] > 0)
    cum = []
    acc = 0.0
    for k in outcomes:
        acc += p[k]
        cum.append(acc)
    cum[-1] = 1.0
    return BranchingLaw(p=dict(sorted(p.items())), b=b, mean_offspring=mean,
                        b_star=b_star, outcomes=outcomes, cumulative=tuple(cum))


def build_default(series: PowerSeries) -> BranchingLaw:
    """Dyadic law: the j-th nonzero k >= 1 gets p_k = 2^-(j+1) / k, p_0 the rest.

    This gives sum k p_k <= 1/2 and p_0 >= 1/2 whatever the coefficients are.
    """
    active = sorted(k for k in series.support if k >= 1)
    p = {k: 2.0 ** -(j + 1) / k for j, k in enumerate(active, start=1)}
    p[0] = 1.0 - math.fsum(p.values())
    return _finish(p, series)


def from_custom(p: dict, series: PowerSeries) -> BranchingLaw:
    """Validate a user-supplied law against ``series``.

    Raises :class:`BranchingError` naming the violated condition: (i) p is a
    probability distribution, (ii) p_k > 0 wherever a_k != 0, (iii) the
    mean offspring is at most 1; p_0 > 0 is required on top so that
    w = v / p_0 exists.
    """
    law = {}
    for k, pk in p.items():
        k = int(k)
        if k < 0:
            raise BranchingError(f"offspring count {k} is negative")
        pk = float(pk)
        if not math.isfinite(pk):
            raise BranchingError(f"condition (i): p_{k} is not finite")
        if pk < 0:
            raise BranchingError(f"condition (i): p_{k} = {pk} is negative")
        law[k] = law.get(k, 0.0) + pk
    total = math.fsum(law.values())
    if abs(total - 1.0) > SUM_TOL:
        raise BranchingError(f"condition (i): probabilities sum to {total!r}, not 1")
    missing = sorted(k for k in series.support if law.get(k, 0.0) <= 0)
    if missing:
        raise BranchingError(
            "condition (ii): p_k must be positive where a_k != 0; missing k = "
            + ", ".join(map(str, missing)))
    mean = math.fsum(k * pk for k, pk in law.items())
    if mean > 1.0 + SUM_TOL:
        raise BranchingError(f"condition (iii): mean offspring {mean!r} exceeds 1")
    if law.get(0, 0.0) <= 0:
        raise BranchingError("p_0 must be positive (w = v / p_0 is undefined otherwise)")
    return _finish({k: pk for k, pk in law.items() if pk > 0 or k == 0}, series)


def b_star(law: BranchingLaw) -> float:
    return law.b_star


def t_star(law: BranchingLaw, data: InitialData, scan_cap: float = 10.0,
           steps: int = 1000) -> float:
    """Largest scanned t with sup|w(.,s)| + s^2 |b_0| / 2 <= 1 for every s <= t.

    The scan runs from 0 to sqrt(2 / b*) (or ``scan_cap`` when b* = 0) in
    ``steps`` equal increments; sup|w| is taken from the declared sup bounds
    of the initial data.  Returns 0 when the condition already fails at t = 0.
    """
    if not data.has_bounds:
        raise ValueError("t_star needs sup_phi and sup_psi in the initial data")
    if steps < 1:
        raise ValueError("t_star scan needs at least one step")
    cap = math.sqrt(2.0 / law.b_star) if law.b_star > 0 else float(scan_cap)
    p0 = law.p0
    b0 = abs(law.b0)
    best = 0.0
    for i in range(steps + 1):
        s = cap * i / steps
        if sup_bound_v(data, s) / p0 + s * s * b0 / 2.0 > 1.0:
            break
        best = s
    return best
