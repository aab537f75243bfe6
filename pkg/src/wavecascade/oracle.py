"""Deterministic reference: Picard iteration on the mild formulation

    u(x,t) = v(x,t) + 1/2 * integral over Delta(x,t) of F(u(y,s)) dy ds

on a uniform space-time grid.  The triangle integral uses composite midpoint
quadrature: every grid cell contributes F(u) at its centre (mean of the four
corner values) times the exact area of the cell clipped to the triangle.

Because the grid is uniform and every apex sits on a node, the clipped
areas depend only on the cell's offset from the apex.  One sweep is
therefore a single 2-D convolution of the cell values with a fixed kernel,
done by FFT.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .dalembert import InitialData, QuadratureSpec, homogeneous_solution_many
from .errors import ConvergenceError
from .series import PowerSeries


@dataclass(frozen=True)
class GridSpec:
    x_lo: float
    x_hi: float
    nx: int
    t_max: float
    nt: int

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("grid needs x_lo < x_hi")
        if self.nx < 2 or self.nt < 2:
            raise ValueError("grid needs nx >= 2 and nt >= 2")
        if not self.t_max > 0:
            raise ValueError("grid needs t_max > 0")

    @property
    def hx(self):
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    @property
    def ht(self):
        return self.t_max / (self.nt - 1)

    @property
    def xs(self):
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    @property
    def ts(self):
        return np.linspace(0.0, self.t_max, self.nt)

    def covers(self, x: float, t: float) -> bool:
        """True when [x - t, x + t] x [0, t] lies inside the grid."""
        eps = 1e-12 * max(1.0, abs(self.x_lo), abs(self.x_hi), self.t_max)
        return (0 <= t <= self.t_max + eps and x - t >= self.x_lo - eps
                and x + t <= self.x_hi + eps)


@dataclass
class Field:
    """Values ``u[i, j]`` at (xs[i], ts[j]) plus the Picard run record."""

    grid: GridSpec
    u: np.ndarray
    iterations: int = 0
    residual: float = math.nan
    residuals: list = field(default_factory=list)
    converged: bool = True

    @property
    def hx(self):
        return self.grid.hx

    @property
    def ht(self):
        return self.grid.ht


def clipped_area(x0: float, x1: float, a: float, b: float) -> float:
    """Area of {x0 <= y <= x1, a <= s <= b, |y| <= s} (s = time before the apex).

    The slice length max(0, min(x1, s) - max(x0, -s)) is piecewise linear in
    s with kinks only at |x0| and |x1|, so the trapezoid rule between
    consecutive kinks is exact.
    """
    def length(s):
        return max(0.0, min(x1, s) - max(x0, -s))

    knots = sorted({a, b} | {k for k in (abs(x0), abs(x1)) if a < k < b})
    return sum(0.5 * (s1 - s0) * (length(s0) + length(s1))
               for s0, s1 in zip(knots, knots[1:]))


def triangle_kernel(hx: float, ht: float, rows: int):
    """Clipped cell areas K[m, k] for time offset m and space offset d = D - 1 - k.

    Row m covers times between (m-1)*ht and m*ht before the apex (row 0 is
    zero); column k holds the cell spanning [d*hx, (d+1)*hx] relative to the
    apex.  Returns (K, D).
    """
    D = int(math.ceil(rows * ht / hx)) + 1
    K = np.zeros((rows + 1, 2 * D))
    for m in range(1, rows + 1):
        a, b = (m - 1) * ht, m * ht
        reach = int(math.ceil(b / hx)) + 1
        for d in range(max(-D, -reach), min(D, reach)):
            K[m, D - 1 - d] = clipped_area(d * hx, (d + 1) * hx, a, b)
    return K, D


def triangle_integral(cells: np.ndarray, kernel, nt: int, nx: int) -> np.ndarray:
    """sum over clipped cells of cells[r, c] * area, for every node (j, i).

    ``cells`` has shape (nt - 1, nx - 1) with rows indexed by time.  Cells
    outside the grid count as zero.
    """
    K, D = kernel
    full = fftconvolve(cells, K, mode="full")
    return full[:nt, D - 1:D - 1 + nx]


def picard_solve(series: PowerSeries, data: InitialData, grid: GridSpec,
                 max_iter: int = 200, tol: float = 1e-10,
                 quad: QuadratureSpec = QuadratureSpec(), points=()) -> Field:
    """Fixed-point iteration u <- v + 1/2 Q[F(u)], starting from u = v.

    Nodes whose light cone leaves the grid see a zero-extended integrand and
    are not meaningful; they never influence covered nodes.  ``points``
    lists (x, t) pairs the caller intends to evaluate, and each must be
    covered.  Raises ConvergenceError (carrying the last iterate) when the
    update does not fall below ``tol`` within ``max_iter`` sweeps.
    """
    if not tol > 0 or max_iter < 1:
        raise ValueError("picard_solve needs tol > 0 and max_iter >= 1")
    for x, t in points:
        if not grid.covers(x, t):
            raise ValueError(f"grid does not cover the light cone of ({x}, {t})")
    T, X = np.meshgrid(grid.ts, grid.xs, indexing="ij")
    v = homogeneous_solution_many(data, quad, X, T)
    kernel = triangle_kernel(grid.hx, grid.ht, grid.nt - 1)
    u = v
    residuals = []
    for it in range(1, max_iter + 1):
        centre = 0.25 * (u[:-1, :-1] + u[1:, :-1] + u[:-1, 1:] + u[1:, 1:])
        with np.errstate(over="ignore", invalid="ignore"):
            new = v + 0.5 * triangle_integral(series(centre), kernel, grid.nt, grid.nx)
        if not np.all(np.isfinite(new)):
            raise ConvergenceError(f"Picard iterate became non-finite at sweep {it}",
                                   Field(grid, u.T.copy(), it - 1,
                                         residuals[-1] if residuals else math.nan,
                                         residuals, False))
        res = float(np.max(np.abs(new - u)))
        residuals.append(res)
        u = new
        if res <= tol:
            return Field(grid, u.T.copy(), it, res, residuals, True)
    f = Field(grid, u.T.copy(), max_iter, residuals[-1], residuals, False)
    raise ConvergenceError(
        f"Picard iteration did not converge in {max_iter} sweeps "
        f"(last update {residuals[-1]:.3g} > tol {tol:g})", f)


def field_lookup(f: Field, x: float, t: float) -> float:
    """Bilinear interpolation of the field at (x, t)."""
    g = f.grid
    eps = 1e-12 * max(1.0, abs(g.x_lo), abs(g.x_hi), g.t_max)
    if not (g.x_lo - eps <= x <= g.x_hi + eps and -eps <= t <= g.t_max + eps):
        raise ValueError(f"({x}, {t}) lies outside the field grid")
    fx = min(max((x - g.x_lo) / g.hx, 0.0), g.nx - 1.0)
    ft = min(max(t / g.ht, 0.0), g.nt - 1.0)
    i = min(int(fx), g.nx - 2)
    j = min(int(ft), g.nt - 2)
    wx = fx - i
    wt = ft - j
    u = f.u
    return float((1 - wx) * ((1 - wt) * u[i, j] + wt * u[i, j + 1])
                 + wx * ((1 - wt) * u[i + 1, j] + wt * u[i + 1, j + 1]))


@dataclass(frozen=True)
class ComparisonRow:
    x: float
    t: float
    mc_mean: float
    stderr: float
    oracle: float
    abs_diff: float
    z: float
    passed: bool


def compare(estimates, f: Field, z_threshold: float = 4.0, oracle_tol: float = 1e-3):
    """Per point: |mc - oracle|, its ratio to stderr, and pass/fail.

    A point passes when |mc - oracle| <= z_threshold * stderr + oracle_tol.
    """
    rows = []
    for e in estimates:
        if not f.grid.covers(e.x, e.t):
            raise ValueError(f"point ({e.x}, {e.t}) is not covered by the field grid")
        ref = field_lookup(f, e.x, e.t)
        diff = abs(e.mean - ref)
        if e.stderr > 0:
            z = diff / e.stderr
        else:
            z = 0.0 if diff == 0 else math.inf
        passed = diff <= z_threshold * e.stderr + oracle_tol
        rows.append(ComparisonRow(e.x, e.t, e.mean, e.stderr, ref, diff, z, bool(passed)))
    return rows


def field_to_csv(f: Field) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "t", "u"))
    xs, ts = f.grid.xs, f.grid.ts
    for j, t in enumerate(ts):
        for i, x in enumerate(xs):
            w.writerow((format(x, ".17g"), format(t, ".17g"), format(f.u[i, j], ".17g")))
    return buf.getvalue()


def read_field_csv(text: str) -> Field:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["x", "t", "u"]:
        raise ValueError("field CSV must have header x,t,u")
    data = np.array([[float(c) for c in row] for row in reader if row])
    if data.size == 0:
        raise ValueError("field CSV has no rows")
    xs = np.unique(data[:, 0])
    ts = np.unique(data[:, 1])
    if len(data) != len(xs) * len(ts):
        raise ValueError("field CSV is not a complete rectangular grid")
    grid = GridSpec(float(xs[0]), float(xs[-1]), len(xs), float(ts[-1]), len(ts))
    if abs(ts[0]) > 1e-12:
        raise ValueError("field grid must start at t = 0")
    if (np.max(np.abs(xs - grid.xs)) > 1e-9 * max(1.0, grid.hx)
            or np.max(np.abs(ts - grid.ts)) > 1e-9 * max(1.0, grid.ht)):
        raise ValueError("field CSV grid is not uniform")
    u = np.empty((len(xs), len(ts)))
    ix = np.searchsorted(xs, data[:, 0])
    it = np.searchsorted(ts, data[:, 1])
    u[ix, it] = data[:, 2]
    return Field(grid, u)
