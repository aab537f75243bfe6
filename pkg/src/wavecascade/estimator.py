"""Monte Carlo estimation of u(x,t) as the mean of the cascade functional.

Samples are split into fixed chunks of CHUNK sample ids.  Each chunk is
reduced with Welford's update and the chunk summaries are merged in
sample-id order (Chan et al. pairwise formula).  The chunking does not
depend on the worker count, so results are bit-identical for any
``threads`` value.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .branching import BranchingLaw, t_star
from .cascade import Caps, SpaceTimePoint, cascade_shape, evaluate_cascade, make_leaf
from .dalembert import InitialData, QuadratureSpec
from .errors import HorizonError
from .rng import RngStream

CHUNK = 4096
FIELDS = ("x", "t", "mean", "stderr", "n", "n_truncated", "bias_low", "bias_high", "seed")


@dataclass
class Accumulator:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    n_truncated: int = 0
    unexpanded: int = 0
    n_excluded: int = 0
    max_abs: float = 0.0

    def add(self, value: float):
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)
        a = abs(value)
        if a > self.max_abs:
            self.max_abs = a

    def merge(self, other: "Accumulator") -> "Accumulator":
        n = self.n + other.n
        if other.n == 0:
            mean, m2 = self.mean, self.m2
        elif self.n == 0:
            mean, m2 = other.mean, other.m2
        else:
            delta = other.mean - self.mean
            mean = self.mean + delta * (other.n / n)
            m2 = self.m2 + other.m2 + delta * delta * (self.n * other.n / n)
        return Accumulator(n, mean, m2,
                           self.n_truncated + other.n_truncated,
                           self.unexpanded + other.unexpanded,
                           self.n_excluded + other.n_excluded,
                           max(self.max_abs, other.max_abs))


@dataclass(frozen=True)
class Estimate:
    point: SpaceTimePoint
    mean: float
    stderr: float
    n: int
    n_truncated: int
    bias_low: float
    bias_high: float
    seed: int
    # not part of the CSV/JSON record
    n_excluded: int = 0
    max_abs: float = 0.0

    @property
    def x(self):
        return self.point.x

    @property
    def t(self):
        return self.point.t

    def record(self) -> dict:
        return {"x": self.point.x, "t": self.point.t, "mean": self.mean,
                "stderr": self.stderr, "n": self.n, "n_truncated": self.n_truncated,
                "bias_low": self.bias_low, "bias_high": self.bias_high, "seed": self.seed}


@dataclass
class RunPlan:
    points: list
    samples: int
    seed: int = 0
    caps: Caps = field(default_factory=Caps)
    threads: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample per point")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def _chunk(task) -> Accumulator:
    law, data, quad, x, t, seed, point_id, start, stop, caps = task
    leaf = make_leaf(law, data, quad)
    root = SpaceTimePoint(x, t)
    acc = Accumulator()
    for i in range(start, stop):
        try:
            s = evaluate_cascade(RngStream(seed, point_id, i), law, data, quad, root,
                                 caps, leaf=leaf)
        except OverflowError:
            acc.n_excluded += 1
            continue
        if not math.isfinite(s.value):
            acc.n_excluded += 1
            continue
        acc.add(s.value)
        if s.truncated:
            acc.n_truncated += 1
            acc.unexpanded += s.unexpanded
    return acc


def _finish(point, acc: Accumulator, seed: int) -> Estimate:
    n = acc.n
    if n >= 2:
        stderr = math.sqrt(max(acc.m2, 0.0) / (n - 1)) / math.sqrt(n)
    else:
        stderr = math.nan
    bias = acc.unexpanded / n if n and acc.unexpanded else 0.0
    return Estimate(point, acc.mean if n else math.nan, stderr, n, acc.n_truncated,
                    -bias if bias else 0.0, bias, seed, acc.n_excluded, acc.max_abs)


def check_horizon(law: BranchingLaw, data: InitialData, points, force=False, horizon=None):
    """Raise HorizonError listing every point with t >= T* (skipped under ``force``)."""
    if force:
        return horizon
    if horizon is None:
        if not data.has_bounds:
            raise HorizonError("T* cannot be verified without sup_phi and sup_psi; "
                               "supply the bounds or force the run")
        horizon = t_star(law, data)
    bad = [p for p in points if p.t >= horizon]
    if bad:
        listed = ", ".join(f"({p.x:g}, {p.t:g})" for p in bad[:5])
        more = f" and {len(bad) - 5} more" if len(bad) > 5 else ""
        raise HorizonError(f"t >= T* = {horizon:.6g} at {listed}{more}; "
                           "outside the bounded-factor regime (use force to run anyway)")
    return horizon


def _run_tasks(tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [_chunk(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_chunk, tasks))


def _tasks_for(law, data, quad, point, point_id, samples, seed, caps):
    return [(law, data, quad, point.x, point.t, seed, point_id, start,
             min(start + CHUNK, samples), caps)
            for start in range(0, samples, CHUNK)]


def estimate_point(law: BranchingLaw, data: InitialData, quad: QuadratureSpec,
                   point: SpaceTimePoint, samples: int, seed: int, caps: Caps = Caps(), *,
                   point_id: int = 0, threads: int = 1, force: bool = False,
                   horizon=None) -> Estimate:
    if not point.t > 0:
        raise ValueError("estimation point must have t > 0")
    if samples < 1:
        raise ValueError("need at least one sample")
    check_horizon(law, data, [point], force, horizon)
    tasks = _tasks_for(law, data, quad, point, point_id, samples, seed, caps)
    acc = Accumulator()
    for part in _run_tasks(tasks, threads):
        acc = acc.merge(part)
    return _finish(point, acc, seed)


def estimate_grid(plan: RunPlan, law: BranchingLaw, data: InitialData,
                  quad: QuadratureSpec, force: bool = False, horizon=None) -> list:
    """Estimate every plan point; point i uses stream keys (seed, i, 0..N-1)."""
    if not plan.points:
        return []
    bad_t = [p for p in plan.points if not p.t > 0]
    if bad_t:
        raise ValueError(f"{len(bad_t)} plan point(s) have t <= 0")
    check_horizon(law, data, plan.points, force, horizon)
    tasks, owners = [], []
    for pid, point in enumerate(plan.points):
        chunk_tasks = _tasks_for(law, data, quad, point, pid, plan.samples, plan.seed,
                                 plan.caps)
        tasks.extend(chunk_tasks)
        owners.extend([pid] * len(chunk_tasks))
    accs = [Accumulator() for _ in plan.points]
    for pid, part in zip(owners, _run_tasks(tasks, plan.threads)):
        accs[pid] = accs[pid].merge(part)
    return [_finish(p, a, plan.seed) for p, a in zip(plan.points, accs)]


def convergence_probe(law: BranchingLaw, data: InitialData, quad: QuadratureSpec,
                      point: SpaceTimePoint, samples: int, seed: int, generations,
                      caps: Caps = Caps(), point_id: int = 0) -> list:
    """Fraction of cascades whose depth exceeds n, for each n in ``generations``.

    Uses the same stream keys as :func:`estimate_point`, so the trees probed
    are exactly the ones the estimator evaluates.  Truncated trees count as
    deeper than every n.
    """
    depths = []
    for i in range(samples):
        s = cascade_shape(RngStream(seed, point_id, i), law, point, caps)
        depths.append(math.inf if s.truncated else s.max_generation)
    return [(n, sum(1 for d in depths if d > n) / samples) for n in generations]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return format(v, ".17g")


def estimates_to_csv(estimates) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for e in estimates:
        rec = e.record()
        writer.writerow([_fmt(rec[k]) for k in FIELDS])
    return buf.getvalue()


def estimates_to_json(estimates, unvalidated=False) -> str:
    rows = []
    for e in estimates:
        rec = e.record()
        # floats pass through repr, which round-trips (>= 17 significant digits)
        rows.append({k: rec[k] for k in FIELDS})
    return json.dumps({"unvalidated-regime": bool(unvalidated), "estimates": rows},
                      indent=2, allow_nan=True) + "\n"


def read_estimates_csv(text: str) -> list:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != FIELDS:
        raise ValueError(f"estimate CSV must have header {','.join(FIELDS)}")
    out = []
    for row in reader:
        out.append(Estimate(SpaceTimePoint(float(row["x"]), float(row["t"])),
                            float(row["mean"]), float(row["stderr"]), int(row["n"]),
                            int(row["n_truncated"]), float(row["bias_low"]),
                            float(row["bias_high"]), int(row["seed"])))
    return out
