"""Command-line front end.

Commands: solve, tstar, tree, oracle, compare, probe.  Exit codes:
0 success, 2 configuration error, 3 t >= T* without --force, 4 numeric
failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .cascade import SpaceTimePoint, sample_tree
from .config import load_config
from .errors import (BoundViolation, BranchingError, ConfigError, ConvergenceError,
                     DomainError, ExpressionError, HorizonError, QuadratureError)
from .estimator import (RunPlan, check_horizon, convergence_probe, estimate_grid,
                        estimates_to_csv, estimates_to_json, read_estimates_csv)
from .oracle import GridSpec, compare, field_to_csv, picard_solve, read_field_csv
from .rng import RngStream

EXIT_OK, EXIT_CONFIG, EXIT_HORIZON, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _g(v) -> str:
    return format(v, ".17g")


def parse_grid(text: str):
    """'x0:x1:nx,t0:t1:nt' -> (xs, ts) as numpy arrays."""
    try:
        xpart, tpart = text.split(",")
        out = []
        for part in (xpart, tpart):
            lo, hi, n = part.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            out.append(np.linspace(float(lo), float(hi), n))
    except ValueError:
        raise UsageError(f"--grid must look like x0:x1:nx,t0:t1:nt, got {text!r}") from None
    return out[0], out[1]


def _points(args):
    if args.grid is not None:
        xs, ts = parse_grid(args.grid)
        return [SpaceTimePoint(float(x), float(t)) for t in ts for x in xs]
    if args.t is None:
        raise UsageError("give --t (and optionally --x) or --grid")
    return [SpaceTimePoint(args.x, args.t)]


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _note(msg):
    print(msg, file=sys.stderr)


def _plan(args, cfg, points):
    return RunPlan(points, args.samples or cfg.samples,
                   cfg.seed if args.seed is None else args.seed, cfg.caps,
                   args.threads or cfg.threads)


def _horizon(cfg, force):
    return None if force else cfg.t_star() if cfg.data.has_bounds else None


def _estimates(args, cfg):
    plan = _plan(args, cfg, _points(args))
    return estimate_grid(plan, cfg.law, cfg.data, cfg.quad, force=args.force,
                         horizon=_horizon(cfg, args.force))


def cmd_solve(args, cfg):
    estimates = _estimates(args, cfg)
    if args.format == "json":
        text = estimates_to_json(estimates, unvalidated=args.force)
    else:
        text = estimates_to_csv(estimates)
        if args.force:
            text = "# unvalidated-regime: true\n" + text
    _emit(text, args.out)
    n_trunc = sum(e.n_truncated for e in estimates)
    n_excl = sum(e.n_excluded for e in estimates)
    _note(f"solved {len(estimates)} point(s), {estimates[0].n if estimates else 0} samples "
          f"each; truncated={n_trunc} excluded={n_excl}"
          + (" [unvalidated regime]" if args.force else ""))
    return EXIT_OK


def cmd_tstar(args, cfg):
    law = cfg.law
    cap = (2.0 / law.b_star) ** 0.5 if law.b_star > 0 else cfg.scan_cap
    step = cap / cfg.scan_steps
    tstar = cfg.t_star()
    if args.format == "json":
        text = json.dumps({"t_star": tstar, "scan_step": step, "b_star": law.b_star,
                           "p0": law.p0, "b0": law.b0,
                           "mean_offspring": law.mean_offspring,
                           "p": {str(k): v for k, v in law.p.items()},
                           "b": {str(k): v for k, v in law.b.items()}}, indent=2) + "\n"
    else:
        lines = [f"T* = {_g(tstar)}", f"scan step = {_g(step)}", f"b* = {_g(law.b_star)}",
                 f"mean offspring = {_g(law.mean_offspring)}", "", "k,p_k,b_k"]
        for k in sorted(set(law.p) | set(law.b)):
            lines.append(f"{k},{_g(law.p.get(k, 0.0))},{_g(law.b.get(k, 0.0))}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_tree(args, cfg):
    if args.t is None:
        raise UsageError("tree needs --t (and optionally --x)")
    root = SpaceTimePoint(args.x, args.t)
    seed = cfg.seed if args.seed is None else args.seed
    if not args.force:
        check_horizon(cfg.law, cfg.data, [root], False, _horizon(cfg, False))
    tree = sample_tree(RngStream(seed, 0, args.sample_id), cfg.law, root, cfg.caps,
                       data=cfg.data, quad=cfg.quad)
    _emit(json.dumps(tree.to_json(), indent=1) + "\n", args.out)
    return EXIT_OK


def _grid(args, cfg) -> GridSpec:
    if args.grid is not None:
        xs, ts = parse_grid(args.grid)
        if ts[0] != 0.0:
            raise UsageError("oracle grids must start at t = 0")
        return GridSpec(float(xs[0]), float(xs[-1]), len(xs), float(ts[-1]), len(ts))
    if cfg.grid is None:
        raise UsageError("no oracle grid: pass --grid or add an 'oracle' section to the config")
    return cfg.grid


def cmd_oracle(args, cfg):
    grid = _grid(args, cfg)
    field = picard_solve(cfg.series, cfg.data, grid, cfg.picard_max_iter, cfg.picard_tol,
                         cfg.quad)
    _emit(field_to_csv(field), args.out)
    _note(f"picard converged in {field.iterations} sweeps, last update {field.residual:.3g}")
    return EXIT_OK


def cmd_compare(args, cfg):
    if args.field is not None:
        with open(args.field, encoding="utf-8") as fh:
            field = read_field_csv(fh.read())
    else:
        field = picard_solve(cfg.series, cfg.data, _grid(args, cfg), cfg.picard_max_iter,
                             cfg.picard_tol, cfg.quad)
    if args.estimates is not None:
        with open(args.estimates, encoding="utf-8") as fh:
            estimates = read_estimates_csv(fh.read())
    else:
        estimates = _estimates(args, cfg)
    rows = compare(estimates, field, args.z_threshold, args.oracle_tol)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "t", "mc_mean", "stderr", "oracle", "abs_diff", "z", "pass"))
    for r in rows:
        w.writerow((_g(r.x), _g(r.t), _g(r.mc_mean), _g(r.stderr), _g(r.oracle),
                    _g(r.abs_diff), _g(r.z), str(r.passed).lower()))
    _emit(buf.getvalue(), args.out)
    _note(f"{sum(r.passed for r in rows)}/{len(rows)} point(s) within "
          f"{args.z_threshold:g} stderr + {args.oracle_tol:g}")
    return EXIT_OK


def _generations(text):
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--generations must be 'lo:hi' or a comma list, got {text!r}") from None


def cmd_probe(args, cfg):
    if args.t is None:
        raise UsageError("probe needs --t (and optionally --x)")
    point = SpaceTimePoint(args.x, args.t)
    table = convergence_probe(cfg.law, cfg.data, cfg.quad, point,
                              args.samples or cfg.samples,
                              cfg.seed if args.seed is None else args.seed,
                              _generations(args.generations), cfg.caps)
    text = "n,p_depth_exceeds_n\n" + "".join(f"{n},{_g(p)}\n" for n, p in table)
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "tstar": cmd_tstar, "tree": cmd_tree,
            "oracle": cmd_oracle, "compare": cmd_compare, "probe": cmd_probe}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wavecascade",
        description="Monte Carlo cascade solver for u_tt - u_xx = F(u) in one space dimension.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, metavar="PATH")
    parser.add_argument("--x", type=float, default=0.0)
    parser.add_argument("--t", type=float)
    parser.add_argument("--grid", metavar="x0:x1:nx,t0:t1:nt")
    parser.add_argument("--samples", type=int, metavar="N")
    parser.add_argument("--seed", type=int, metavar="U64")
    parser.add_argument("--threads", type=int, metavar="K")
    parser.add_argument("--out", metavar="PATH")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--force", action="store_true",
                        help="permit t >= T*; output is marked unvalidated-regime")
    parser.add_argument("--sample-id", type=int, default=0, help="tree: sample stream index")
    parser.add_argument("--field", metavar="PATH", help="compare: oracle field CSV")
    parser.add_argument("--estimates", metavar="PATH", help="compare: estimates CSV")
    parser.add_argument("--z-threshold", type=float, default=4.0)
    parser.add_argument("--oracle-tol", type=float, default=1e-3)
    parser.add_argument("--generations", default="0:40", help="probe: 'lo:hi' or '0,5,10'")
    return parser


def _attach_values(argv):
    # argparse reads a value like "-1:1:3,..." as an option; bind it to its flag
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--grid", "--generations"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-"):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_attach_values(argv))
    try:
        for name in ("samples", "threads"):
            val = getattr(args, name)
            if val is not None and val < 1:
                raise UsageError(f"--{name} must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, UsageError, ExpressionError, BranchingError, BoundViolation) as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG
    except HorizonError as exc:
        _note(f"error: {exc}")
        return EXIT_HORIZON
    except (QuadratureError, ConvergenceError, DomainError, ArithmeticError) as exc:
        _note(f"numeric failure: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _note(f"I/O error: {exc}")
        return EXIT_IO
    except ValueError as exc:
        _note(f"error: {exc}")
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
