import math
from fractions import Fraction

import pytest

from wavecascade.branching import build_default, from_custom
from wavecascade.dalembert import QuadratureSpec, initial_data
from wavecascade.series import poly

# u = 0.4 cos(x) cos(sqrt(2) t) solves u_tt - u_xx = -u with phi = 0.4 cos x, psi = 0
LINEAR_EXACT = 0.4 * math.cos(math.sqrt(2) * 0.5)

ACCEPTANCE_RESULTS = {}


def progeny_probability(p, size):
    """P(total progeny == size) by enumerating offspring sequences (exact, small sizes)."""
    p = {k: Fraction(v).limit_denominator(10**9) for k, v in p.items()}

    # forest of m trees has total size s with probability f(m, s)
    cache = {}

    def forest(m, s):
        if m == 0:
            return Fraction(int(s == 0))
        if s < m:
            return Fraction(0)
        key = (m, s)
        if key not in cache:
            # expand the first tree's root, its children join the forest
            cache[key] = sum(pk * forest(m - 1 + k, s - 1) for k, pk in p.items())
        return cache[key]

    return forest(1, size)


def record(key, ok, detail):
    ACCEPTANCE_RESULTS[key] = (bool(ok), detail)
    print(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def quad():
    return QuadratureSpec()


@pytest.fixture
def linear_problem():
    """F(u) = -u with the half/half law, phi = 0.4 cos x (T* = 1)."""
    s = poly([0, -1])
    law = from_custom({0: 0.5, 1: 0.5}, s)
    data = initial_data("0.4*cos(x)", "0", sup_phi=0.4, sup_psi=0.0)
    return s, law, data


@pytest.fixture
def quadratic_problem():
    """F(u) = u^2 with the default law, phi = 0.1 exp(-x^2) (T* = 0.5)."""
    s = poly([0, 0, 1])
    law = build_default(s)
    data = initial_data("0.1*exp(-x^2)", "0", sup_phi=0.1, sup_psi=0.0)
    return s, law, data


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{key:>4} {'PASS' if ok else 'FAIL'}  {detail}")
