from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from floydlab.amalgam import (AB, XY, BudgetExceeded, DoublePresentation, ball, build_relator,
                              canonical_key, coset_shorten, geodesic_length, reduce_normal_form,
                              retract, to_normal_form, verify_cyclic_geodesic)
from floydlab.construction import StageRecord, build_stage
from floydlab.words import AFFINE, Word, concat, parse_word, reduce
from oracles import all_reduced, g1_ball, g1_image

P = parse_word


@pytest.fixture(scope="module")
def tower2():
    return build_stage(2)


@pytest.fixture(scope="module")
def G1(tower2):
    return DoublePresentation.from_state(tower2, 1)


@pytest.fixture(scope="module")
def affine3():
    return build_stage(3, AFFINE)


@pytest.fixture(scope="module")
def ball5(G1):
    return ball(G1, 5)


@pytest.fixture(scope="module")
def oracle5():
    return g1_ball(5)


def test_normal_form_examples(G1):
    assert to_normal_form(P("a b y^-1 x^-1"), G1).is_identity()
    e = to_normal_form(P("x a"), G1)
    assert e.normal_length == 2 and [s for s, _ in e.syllables] == [XY, AB]
    e = to_normal_form(P("a b"), G1)
    assert e.normal_length == 1 and G1.in_K(e.syllables[0][1], e.syllables[0][0])


def test_coset_shorten_examples(G1):
    assert coset_shorten(P("a b a"), AB, G1) == (3, Word.identity())
    assert coset_shorten(P("a^-1"), AB, G1) == (1, Word.identity())
    assert coset_shorten(Word.identity(), AB, G1) == (0, Word.identity())


@given(st.lists(st.sampled_from([1, 2, -1, -2]), max_size=6).map(reduce))
def test_coset_shorten_brute_force(v):
    G1 = DoublePresentation.from_state(build_stage(1), 1)
    n, u = coset_shorten(v, AB, G1)
    ab = P("a b")
    best = min(concat(v, ab ** k).length for k in range(-8, 9))
    assert n == best == concat(v, u).length
    assert G1.graph.contains(u)


def test_reduce_normal_form_examples(G1):
    e = to_normal_form(P("x a"), G1)
    assert reduce_normal_form(e, G1) == e
    e = to_normal_form(P("x y x a"), G1)
    assert reduce_normal_form(e, G1).length == 4
    ident = to_normal_form(Word.identity(), G1)
    assert reduce_normal_form(ident, G1).is_identity()


def test_reduce_normal_form_shortens():
    # over K = <a b^2>, the pair (a b^3 | y^-2 x^-1 y) shortens by moving b^2 a^-1 across
    G = DoublePresentation.from_state(build_stage(1, seed=P("a b^2")), 1)
    e = to_normal_form(P("a b^3 y^-2 x^-1 y"), G)
    r = reduce_normal_form(e, G)
    assert r.length < e.length
    assert canonical_key(r, G) == canonical_key(e, G)


def test_geodesic_length_examples(G1):
    assert geodesic_length(P("x a"), G1) == 2
    assert geodesic_length(P("a b"), G1) == 2
    assert geodesic_length(P("a x a^-1 x^-1"), G1) == 4


def test_ball_examples(G1):
    assert len(ball(G1, 0)) == 1
    assert ball(G1, 1).sphere_sizes() == [1, 8]
    sizes = ball(G1, 2).sphere_sizes()
    assert sizes[2] < 8 * 7
    with pytest.raises(BudgetExceeded) as info:
        ball(G1, 3, budget=100)
    assert len(info.value.partial) > 100


def test_ball_csv(G1, tmp_path):
    path = tmp_path / "ball.csv"
    ball(G1, 2).write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "canonical_form,distance"
    assert lines[1] == "1,0"
    assert len(lines) == 1 + 1 + 8 + 52


def test_relator_examples(tower2, affine3):
    R1 = build_relator(1, tower2)
    assert R1.word == P("y^-1 x^-1 a b") and not R1.shortened
    R2 = build_relator(2, affine3)
    assert R2.word == P("x^-1 y^-4 x^-5 y^-1 b a^5 b^4 a")
    assert R2.properties["shape_w_inverse_xy_w_ab"]
    with pytest.raises(ValueError):
        build_relator(5, affine3)
    bad = replace(tower2, records=(tower2.records[0], StageRecord(P("a b a b"))))
    with pytest.raises(ValueError):
        build_relator(2, bad)


def test_tower_relator_two(tower2):
    R2 = build_relator(2, tower2)
    assert R2.length == 2 * 255 and not R2.shortened


def test_verify_cyclic_geodesic(tower2, affine3, G1):
    rep = verify_cyclic_geodesic(build_relator(1, tower2), DoublePresentation.trivial())
    assert rep.ok and rep.checked == 4
    assert verify_cyclic_geodesic(build_relator(2, affine3), G1).ok
    assert verify_cyclic_geodesic(build_relator(2, tower2), G1).ok
    R3 = build_relator(3, affine3)
    assert verify_cyclic_geodesic(R3, DoublePresentation.from_state(affine3, 2)).ok
    partial = verify_cyclic_geodesic(build_relator(2, tower2), G1, max_conjugates=10)
    assert partial.inconclusive and not partial.ok


def test_corrupted_relator_fails(affine3, G1):
    R2 = build_relator(2, affine3).word
    corrupt = concat(concat(R2.prefix(4), P("a b y^-1 x^-1")), R2.subword(4, R2.length))
    assert corrupt.length == R2.length + 4
    rep = verify_cyclic_geodesic(corrupt, G1)
    assert rep.violations
    assert all(v["geodesic"] < v["length"] for v in rep.violations)


# --- properties ------------------------------------------------------------------

def test_isometric_embedding_of_factors(affine3):
    G2 = DoublePresentation.from_state(affine3, 2)
    for t in all_reduced(6):
        w = reduce(list(t))
        assert geodesic_length(w, G2) == w.length
        assert geodesic_length(w.relabel(2), G2) == w.length


eight = st.lists(st.sampled_from([1, 2, 3, 4, -1, -2, -3, -4]), max_size=16).map(reduce)


@settings(max_examples=150, deadline=None)
@given(eight, st.integers(0, 10**6))
def test_normal_form_order_independence(affine3, w, seed):
    for n in (1, 2):
        G = DoublePresentation.from_state(affine3, n)
        forms = [to_normal_form(w, G, "left"), to_normal_form(w, G, "right"),
                 to_normal_form(w, G, "random", seed)]
        assert len({f.normal_length for f in forms}) == 1
        assert len({canonical_key(f, G) for f in forms}) == 1


def test_geodesic_oracle_radius5(G1, oracle5):
    for img, (d, sp) in oracle5.items():
        assert geodesic_length(reduce(list(sp)), G1) == d


def test_ball_matches_oracle(ball5, oracle5):
    assert len(ball5) == len(oracle5)
    images = {}
    for key, (d, e, sp) in ball5.elements.items():
        img = g1_image(tuple(sp.letters()))
        assert oracle5[img][0] == d
        images[img] = key
    # canonical keys and oracle classes are in bijection
    assert len(images) == len(ball5)


def test_retraction_never_increases_length(ball5):
    for d, e, sp in ball5.elements.values():
        assert retract(sp).length <= d
