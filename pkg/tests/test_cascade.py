import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecascade.branching import build_default, from_custom
from wavecascade.cascade import (Caps, ContainmentError, SpaceTimePoint, cascade_shape,
                                 evaluate_cascade, evaluate_truncated, leaf_value,
                                 make_leaf, sample_offspring, sample_tree, triangle_point)
from wavecascade.dalembert import homogeneous_solution, initial_data
from wavecascade.rng import RngStream
from wavecascade.series import poly

from conftest import progeny_probability

GW = {0: 0.75, 2: 0.25}


def test_progeny_oracle():
    assert progeny_probability(GW, 1) == Fraction(3, 4)
    assert progeny_probability(GW, 3) == Fraction(9, 64)
    assert progeny_probability(GW, 2) == 0


def test_rng_stream_determinism_and_independence():
    first = RngStream(7, 1, 2).uniform()
    s1, s2 = RngStream(7, 1, 2), RngStream(7, 1, 2)
    draws1 = [s1.uniform() for _ in range(200)]
    assert draws1 == [s2.uniform() for _ in range(200)]
    assert draws1[0] == first
    other = RngStream(7, 1, 3)
    assert [other.uniform() for _ in range(200)] != draws1
    assert all(0.0 <= u < 1.0 for u in draws1)
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(1 << 64)


def test_triangle_examples():
    xi, tau = triangle_point(0.0, 1.0, 1.0, 0.3)
    assert tau == 0.0 and -1.0 <= xi <= 1.0
    assert triangle_point(3.0, 2.0, 0.0, 0.77) == (3.0, 2.0)


def test_triangle_quarter_probability():
    # P(tau <= s/2) = 3/4 from the density 2 (s - tau) / s^2
    s = 1.3
    rng = np.random.default_rng(3)
    u = rng.random(100_000)
    taus = s * (1 - np.sqrt(u))
    frac = np.mean(taus <= s / 2)
    assert abs(frac - 0.75) <= 3 * math.sqrt(0.75 * 0.25 / u.size)


def test_sample_triangle_rejects_flat_apex():
    from wavecascade.cascade import sample_triangle

    with pytest.raises(ValueError):
        sample_triangle(RngStream(0), SpaceTimePoint(0.0, 0.0))
    with pytest.raises(ValueError):
        SpaceTimePoint(0.0, -1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(1e-6, 10), st.floats(0, 1), st.floats(0, 1))
def test_triangle_point_lies_in_cone(x, t, u, v):
    xi, tau = triangle_point(x, t, u, v)
    assert 0 <= tau <= t
    assert abs(xi - x) <= (t - tau) * (1 + 1e-12) + 1e-15


def test_offspring_examples():
    rng = RngStream(1)
    assert all(sample_offspring(rng, build_default(poly([0.0]))) == 0 for _ in range(100))
    law = from_custom(GW, poly([0, 0, 1]))
    rng = RngStream(11, 0, 1)
    counts = [sample_offspring(rng, law) for _ in range(100_000)]
    assert set(counts) <= {0, 2}
    assert abs(counts.count(2) / len(counts) - 0.25) <= 0.005


def test_leaf_value_examples(quad):
    zero = initial_data("0", "0")
    law = build_default(poly([0.0]))
    assert leaf_value(zero, law, quad, SpaceTimePoint(1.2, 0.8)) == 0.0
    half = from_custom({0: 0.5, 1: 0.5}, poly([0, -1]))
    got = leaf_value(initial_data("0.4*cos(x)"), half, quad, SpaceTimePoint(0.0, 0.5))
    assert got == pytest.approx(0.8 * math.cos(0.5), abs=1e-14)
    assert got == pytest.approx(0.70207, abs=1e-5)
    c = 1.7
    got = leaf_value(zero, build_default(poly([c])), quad, SpaceTimePoint(-2.0, 0.6))
    assert got == pytest.approx(c * 0.36 / 2, abs=1e-15)
    with pytest.raises(ValueError):
        make_leaf(_law_without_p0(), zero, quad)


def _law_without_p0():
    from wavecascade.branching import BranchingLaw

    return BranchingLaw(p={1: 1.0}, b={1: 1.0}, mean_offspring=1.0, b_star=1.0,
                        outcomes=(1,), cumulative=(1.0,))


def test_single_vertex_cascade(quad, linear_problem):
    _, _, data = linear_problem
    law = build_default(poly([0.0]))
    root = SpaceTimePoint(0.3, 0.9)
    s = evaluate_cascade(RngStream(4), law, data, quad, root)
    assert s.vertex_count == 1 and s.max_generation == 0 and not s.truncated
    assert s.value == leaf_value(data, law, quad, root)


def test_constant_source_is_deterministic(quad):
    c = 0.8
    data = initial_data("sin(x)", "0")
    law = build_default(poly([c]))
    root = SpaceTimePoint(0.4, 0.7)
    expected = homogeneous_solution(data, quad, 0.4, 0.7) + c * 0.49 / 2
    for seed in range(5):
        s = evaluate_cascade(RngStream(seed), law, data, quad, root)
        assert s.value == pytest.approx(expected, abs=1e-14)


def test_galton_watson_small_sizes(quad):
    law = from_custom(GW, poly([0, 0, 1]))
    root = SpaceTimePoint(0.0, 0.4)
    n = 40_000
    sizes = [cascade_shape(RngStream(21, 0, i), law, root).vertex_count for i in range(n)]
    for size in (1, 3):
        p = float(progeny_probability(GW, size))
        assert abs(sizes.count(size) / n - p) <= 4 * math.sqrt(p * (1 - p) / n)
    assert 2 not in sizes


def test_mean_vertex_count_subcritical():
    law = from_custom({0: 0.5, 1: 0.5}, poly([0, -1]))
    root = SpaceTimePoint(0.0, 0.5)
    counts = np.array([cascade_shape(RngStream(5, 0, i), law, root).vertex_count
                       for i in range(20_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 1 / (1 - 0.5)) <= 3 * se


def test_bounded_factor_regime(quad, linear_problem):
    _, law, data = linear_problem
    root = SpaceTimePoint(0.0, 0.9)
    leaf = make_leaf(law, data, quad)
    for i in range(3000):
        s = evaluate_cascade(RngStream(2, 0, i), law, data, quad, root, leaf=leaf, check=True)
        assert abs(s.value) <= 1 and not s.truncated


def test_containment_check_passes_on_deep_trees(quad):
    law = from_custom(GW, poly([0, 0, 0.1]))
    data = initial_data("0.1*cos(x)")
    for i in range(500):
        evaluate_cascade(RngStream(9, 3, i), law, data, quad, SpaceTimePoint(1.0, 2.0),
                         check=True)
    assert issubclass(ContainmentError, AssertionError)


def test_evaluate_truncated_examples(quad, linear_problem):
    _, law, data = linear_problem
    root = SpaceTimePoint(0.2, 0.6)
    assert evaluate_truncated(RngStream(0), law, data, quad, root, 0,
                              lambda x, t: x + 10 * t) == 0.2 + 6.0
    trivial = build_default(poly([0.0]))
    for n in (1, 2, 5):
        got = evaluate_truncated(RngStream(n), trivial, data, quad, root, n, lambda x, t: 99.0)
        assert got == leaf_value(data, trivial, quad, root)
    with pytest.raises(ValueError):
        evaluate_truncated(RngStream(0), law, data, quad, root, -1, lambda x, t: 0.0)


def test_truncated_with_exact_boundary_is_unbiased(quad, linear_problem):
    # boundary = the exact solution, so every generation bound gives the same mean
    _, law, data = linear_problem
    root = SpaceTimePoint(0.0, 0.5)
    leaf = make_leaf(law, data, quad)

    def exact(x, t):
        return 0.4 * math.cos(x) * math.cos(math.sqrt(2) * t)

    vals = np.array([evaluate_truncated(RngStream(8, 0, i), law, data, quad, root, 1, exact,
                                        leaf=leaf) for i in range(20_000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - exact(0.0, 0.5)) <= 4 * se


def test_sample_tree_examples(quad, linear_problem):
    _, law, data = linear_problem
    root = SpaceTimePoint(0.0, 0.5)
    single = sample_tree(RngStream(0), build_default(poly([0.0])), root)
    assert [v["id"] for v in single.vertices] == [()]
    t1 = sample_tree(RngStream(3, 0, 17), law, root)
    t2 = sample_tree(RngStream(3, 0, 17), law, root)
    assert t1.to_json() == t2.to_json()
    for i in range(200):
        tree = sample_tree(RngStream(3, 0, i), law, root)
        ids = {v["id"] for v in tree.vertices}
        for v in tree.vertices:
            assert v["kappa"] <= 1
            if v["id"]:
                assert v["id"][:-1] in ids
                assert 1 <= v["id"][-1]


def test_tree_matches_evaluation(quad, quadratic_problem):
    _, _, data = quadratic_problem
    law = from_custom(GW, poly([0, 0, 1]))
    root = SpaceTimePoint(0.1, 0.45)
    for i in range(300):
        tree = sample_tree(RngStream(12, 0, i), law, root, data=data, quad=quad)
        s = evaluate_cascade(RngStream(12, 0, i), law, data, quad, root)
        assert len(tree.vertices) == s.vertex_count
        # rebuild the product from the recorded factors
        children = {}
        for v in tree.vertices:
            if v["id"]:
                children.setdefault(v["id"][:-1], []).append(v["id"])
        factors = {v["id"]: v["factor"] for v in tree.vertices}

        def value(vid):
            out = factors[vid]
            for c in children.get(vid, []):
                out *= value(c)
            return out

        assert value(()) == s.value
        for v in tree.vertices:
            if v["id"]:
                parent = next(p for p in tree.vertices if p["id"] == v["id"][:-1])
                assert v["tau"] <= parent["tau"]
                assert abs(v["xi"] - parent["xi"]) <= (parent["tau"] - v["tau"]) * (1 + 1e-12)
                assert len(children[parent["id"]]) == parent["kappa"]


def test_tree_json_shape():
    law = from_custom(GW, poly([0, 0, 1]))
    doc = sample_tree(RngStream(1, 0, 5), law, SpaceTimePoint(0.0, 0.3)).to_json()
    assert set(doc) == {"truncated", "vertices"}
    assert set(doc["vertices"][0]) == {"id", "xi", "tau", "kappa", "factor"}
    assert doc["vertices"][0]["id"] == []


def test_caps_truncate_with_zero_value(quad):
    # critical unary law never stops on its own
    law = from_custom({0: 1e-9, 1: 1 - 1e-9}, poly([0, 1]))
    data = initial_data("0.1")
    s = evaluate_cascade(RngStream(0), law, data, quad, SpaceTimePoint(0.0, 1.0),
                         Caps(max_vertices=50, max_generation=10**4))
    assert s.truncated and s.value == 0.0 and s.unexpanded == 1 and s.vertex_count == 50
    s = evaluate_cascade(RngStream(0), law, data, quad, SpaceTimePoint(0.0, 1.0),
                         Caps(max_vertices=10**6, max_generation=7))
    assert s.truncated and s.max_generation == 7
    tree = sample_tree(RngStream(0), law, SpaceTimePoint(0.0, 1.0), Caps(max_vertices=5))
    assert tree.truncated and len(tree.vertices) == 5


def test_unexpanded_counts_pending_siblings(quad):
    law = from_custom({0: 2 / 3, 3: 1 / 3}, poly([0, 0, 0, 0.1]))
    caps = Caps(max_generation=1)
    root = SpaceTimePoint(0.0, 1.0)
    seen = 0
    for i in range(400):
        s = evaluate_cascade(RngStream(0, 0, i), law, initial_data("0"), quad, root, caps)
        if not s.truncated:
            continue
        seen += 1
        # the last recorded vertex is the generation-1 child that hit the cap
        last = sample_tree(RngStream(0, 0, i), law, root, caps).vertices[-1]
        assert len(last["id"]) == 1
        assert s.value == 0.0 and s.unexpanded == 1 + (3 - last["id"][0])
    assert seen > 50


def test_caps_must_be_positive():
    with pytest.raises(ValueError):
        Caps(max_vertices=0)
    with pytest.raises(ValueError):
        Caps(max_generation=-1)


def test_deep_chain_does_not_recurse(quad):
    law = from_custom({0: 1e-6, 1: 1 - 1e-6}, poly([0, 0.5]))
    s = evaluate_cascade(RngStream(1), law, initial_data("0.1"), quad,
                         SpaceTimePoint(0.0, 1.0), Caps(max_vertices=10**6, max_generation=5000))
    assert s.truncated and s.max_generation == 5000


def test_truncated_with_picard_boundary_linear_case(quad, linear_problem):
    from wavecascade.oracle import GridSpec, field_lookup, picard_solve

    s, law, data = linear_problem
    field = picard_solve(s, data, GridSpec(-4.0, 4.0, 801, 0.6, 121), points=[(0.0, 0.5)])
    root = SpaceTimePoint(0.0, 0.5)
    leaf = make_leaf(law, data, quad)

    def boundary(x, t):
        return field_lookup(field, x, t)

    n = 100_000
    vals = np.array([evaluate_truncated(RngStream(14, 0, i), law, data, quad, root, 3,
                                        boundary, leaf=leaf) for i in range(n)])
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(vals.mean() - field_lookup(field, 0.0, 0.5)) <= 4 * se
