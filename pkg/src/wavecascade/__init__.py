"""Stochastic-cascade Monte Carlo solver for the 1D semilinear wave equation

    u_tt - u_xx = F(u),   u(x,0) = phi(x),   u_t(x,0) = psi(x),

with analytic F, plus a Picard-iteration reference solver.
"""

from .branching import BranchingLaw, build_default, from_custom, t_star
from .cascade import (Caps, CascadeSample, CascadeTree, SpaceTimePoint, evaluate_cascade,
                      evaluate_truncated, sample_tree)
from .dalembert import InitialData, QuadratureSpec, homogeneous_solution, initial_data
from .estimator import Estimate, RunPlan, convergence_probe, estimate_grid, estimate_point
from .expr import parse
from .oracle import GridSpec, compare, field_lookup, picard_solve
from .rng import RngStream
from .series import PowerSeries, from_named, poly

__version__ = "0.1.0"
