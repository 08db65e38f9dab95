import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from floydlab.amalgam import DoublePresentation
from floydlab.construction import build_stage
from floydlab.floyd import (OutsideBall, PathError, QuasiParams, ScalingFunction, WeightedBall,
                            bigon_separation_free, collapse_experiment, controlled_floyd_distance,
                            floyd_distance_in_ball, floyd_length, group_length, is_quasigeodesic,
                            k2_rays, path_from_word, random_geodesic, ray_is_floyd_geodesic, ray_prefix,
                            separation_experiment)
from floydlab.words import AFFINE, Word, parse_word

P = parse_word
ONE = Word.identity()
HALF = ScalingFunction.geometric(Fraction(1, 2))


@pytest.fixture(scope="module")
def tower2():
    return build_stage(2)


@pytest.fixture(scope="module")
def G1(tower2):
    return DoublePresentation.from_state(tower2, 1)


@pytest.fixture(scope="module")
def F5():
    return WeightedBall.free(5, HALF)


@pytest.fixture(scope="module")
def B4(G1):
    return WeightedBall.amalgam(G1, 4, HALF)


def test_scaling_functions():
    assert HALF(3) == Fraction(1, 8) and HALF.total() == 2 and HALF.ratio_ok(20)
    poly = ScalingFunction.polynomial(2)
    assert poly(1) == Fraction(1, 4) and poly.ratio_ok(20)
    tab = ScalingFunction.table([1, Fraction(1, 2), Fraction(1, 3)])
    assert tab.ratio_ok(2) and tab.lam == Fraction(1, 2)
    with pytest.raises(ValueError):
        tab(3)
    for bad in (lambda: ScalingFunction.geometric(1), lambda: ScalingFunction.polynomial(1),
                lambda: ScalingFunction.table([1, 2])):
        with pytest.raises(ValueError):
            bad()


@given(st.fractions(Fraction(1, 1000), 1), st.fractions(0, 10))
def test_quasi_param_conversion(lam, eps):
    q = QuasiParams.lower_density(lam, eps)
    assert q.to_multiplicative().to_lower_density() == q


def test_floyd_length_examples():
    assert floyd_length([ONE, P("a"), P("a b")], HALF) == Fraction(3, 2)
    assert floyd_length([ONE], HALF) == 0
    assert floyd_length(path_from_word(P("a^3")), HALF) == Fraction(7, 4)
    with pytest.raises(PathError):
        floyd_length([ONE, P("a b")], HALF)


def test_floyd_length_not_translation_invariant():
    path = path_from_word(P("a"), P("a"))
    moved = path_from_word(P("a"))
    assert floyd_length(path, HALF) == Fraction(1, 2) and floyd_length(moved, HALF) == 1


def test_distance_in_ball_examples(F5, B4):
    r = floyd_distance_in_ball(P("a^3"), ONE, F5)
    assert r.value == Fraction(7, 4) and r.exact
    assert r.path == [P("a^3"), P("a^2"), P("a"), ONE]
    assert floyd_distance_in_ball(P("a b"), P("a b"), F5).value == 0
    assert floyd_distance_in_ball(P("a b"), P("x y"), B4).value == 0
    with pytest.raises(OutsideBall):
        floyd_distance_in_ball(P("a^6"), ONE, F5)


def test_is_quasigeodesic_examples():
    one_zero = QuasiParams.multiplicative(1, 0)
    assert is_quasigeodesic(path_from_word(P("a b a")), one_zero)
    assert not is_quasigeodesic([ONE, P("a"), ONE, P("a")], one_zero)
    G0 = group_length(DoublePresentation.trivial())
    arc = path_from_word(P("y^-1 x^-1"))
    assert is_quasigeodesic(arc, QuasiParams.multiplicative(2, 2), G0)


def _sphere_bound_holds(B, rng, trials):
    for _ in range(trials):
        i, j = rng.randrange(len(B)), rng.randrange(len(B))
        r = floyd_distance_in_ball(B.spell[i], B.spell[j], B)
        m, n = sorted((B.dist[i], B.dist[j]))
        assert r.value >= B.f.tail(m, n)


def test_sphere_crossing_lower_bound(F5, B4):
    rng = random.Random(1)
    _sphere_bound_holds(F5, rng, 40)
    _sphere_bound_holds(B4, rng, 40)


def test_nested_balls_never_increase(G1):
    pairs = [(P("a b a"), P("y^-1 x")), (P("a^2"), P("b^2")), (P("x a"), P("b y"))]
    prev = None
    for r in (3, 4, 5):
        B = WeightedBall.amalgam(G1, r, HALF)
        vals = [floyd_distance_in_ball(p, q, B).value for p, q in pairs]
        if prev is not None:
            assert all(v <= u for v, u in zip(vals, prev))
        prev = vals


def test_controlled_distance_properties(B4, F5):
    p, q = P("a b a"), P("b^-1 a^-1 b^-1")
    base = floyd_distance_in_ball(p, q, B4).value
    vals = [controlled_floyd_distance(p, q, k, B4).value for k in (1, 2, 3)]
    assert vals[0] >= base
    assert vals[0] >= vals[1] >= vals[2]
    assert controlled_floyd_distance(ONE, ONE, 2, B4).value == 0
    for p, q in ((P("a^2"), P("b^2")), (P("a b"), P("b^-1 a")), (P("a^-1 b"), P("a b^-1"))):
        r = controlled_floyd_distance(p, q, 1, F5)
        assert r.value == bigon_separation_free(p, q, HALF)


def test_controlled_budget_flags_inconclusive(B4):
    r = controlled_floyd_distance(P("a b a"), P("b^-1 a^-1 b^-1"), 2, B4, budget=3)
    assert r.inconclusive and r.value is None
    assert r.lower_bound <= controlled_floyd_distance(P("a b a"), P("b^-1 a^-1 b^-1"), 2, B4).value


def test_ray_examples(F5, B4):
    r = ray_is_floyd_geodesic(P("a^3"), F5)
    assert r.verdict and r.floyd_length == r.floyd_distance == Fraction(7, 4)
    assert ray_is_floyd_geodesic(P("a b"), B4).verdict
    bad = ray_is_floyd_geodesic(P("a b y^-1"), B4)  # a b y^-1 = x has length 1
    assert not bad.verdict and "precondition" in bad.reason


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_random_rays_are_floyd_geodesics(seed, depth):
    B = WeightedBall.free(4, HALF)
    assert ray_is_floyd_geodesic(random_geodesic(B, depth, random.Random(seed)), B).verdict


def test_collapse_examples():
    state = build_stage(3, AFFINE)
    T = collapse_experiment(state, [1, 2, 3], HALF)
    assert T.rows_[0].detour == 1 and T.rows_[0].relator_length == 4
    assert T.consistent()
    T3 = collapse_experiment(state, [1, 2, 3], ScalingFunction.geometric(Fraction(1, 3)))
    assert all(a.detour < b.detour for a, b in zip(T3.rows_, T.rows_))


def test_separation_in_free_group_matches_bigons(tower2):
    B = WeightedBall.free(5, HALF)
    T = separation_experiment(tower2, [0, 1, 2], [1], HALF, B=B)
    rays = k2_rays(tower2)
    for c in T.cells:
        pair = c.pair.split("|")
        if c.depth == 0:
            assert c.result.value == 0
        p, q = (ray_prefix(rays[n], c.depth) for n in pair)
        assert c.result.value == bigon_separation_free(p, q, HALF)
