import pytest
from hypothesis import given, settings, strategies as st

from floydlab.words import (ABXY, AFFINE, F2, TOWER, AlphabetError, CyclicWord,
                            DegenerateInputError, GrowthSchedule, MagnitudeError, Word, build_U,
                            common_prefix_length, concat, cyclic_reduce, format_word,
                            gromov_product, invert, is_proper_power, longest_common_subword,
                            min_rotation, parse_word, reduce, rotate, shortlex_key, tower)

P = parse_word

letters2 = st.lists(st.sampled_from([1, 2, -1, -2]), max_size=14)
letters4 = st.lists(st.sampled_from([1, 2, 3, 4, -1, -2, -3, -4]), max_size=14)


def reduced_words(letters=letters2):
    return letters.map(reduce)


def _naive_reduce(seq):
    out = []
    for c in seq:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return out


# --- oracle examples -------------------------------------------------------

def test_reduce_examples():
    assert reduce(["a", "b", "b^-1", "a"]) == P("a^2")
    assert reduce(["a", "a^-1"]) == Word.identity()
    assert reduce([1, 1, 1, 2, 2, 2]) == P("a^3 b^3")


def test_reduce_unknown_symbol():
    with pytest.raises(AlphabetError):
        reduce(["a", "z"])


def test_concat_examples():
    assert concat(P("a"), P("a^-1")) == Word.identity()
    assert concat(P("a^3"), P("a^-1 b")) == P("a^2 b")
    assert concat(P("a b"), P("b^-1 a")) == P("a^2")


def test_concat_alphabet_mismatch():
    with pytest.raises(AlphabetError):
        concat(P("a", F2), P("a", ABXY))


def test_invert_examples():
    assert invert(P("a^3 b^3")) == P("b^-3 a^-3")
    assert invert(Word.identity()) == Word.identity()
    assert invert(invert(P("a b"))) == P("a b")


def test_cyclic_reduce_examples():
    core, conj = cyclic_reduce(P("a^-1 b a"))
    assert core.representative == P("b") and conj == P("a")
    core, conj = cyclic_reduce(P("a b"))
    assert core.representative == P("a b") and conj == Word.identity()
    core, conj = cyclic_reduce(P("b^-1 a^-1 b a b"))
    assert core.representative == P("b") and conj == P("a b")
    with pytest.raises(DegenerateInputError):
        cyclic_reduce(Word.identity())


def test_proper_power_examples():
    assert is_proper_power(P("a b a b")) == (P("a b"), 2)
    assert is_proper_power(P("a b")) == (P("a b"), 1)
    assert is_proper_power(P("a^3")) == (P("a"), 3)
    with pytest.raises(DegenerateInputError):
        is_proper_power(Word.identity())


def test_gromov_examples():
    assert gromov_product(P("a b"), P("a a")) == 1
    h = P("a^3 b^-2 a")
    assert gromov_product(h, h) == h.length
    assert gromov_product(P("a"), P("b")) == 0


def test_tower_values():
    assert [tower(n) for n in (1, 2, 3, 4)] == [2, 4, 16, 65536]
    assert tower(3, AFFINE) == 4
    with pytest.raises(MagnitudeError) as info:
        tower(5)
    assert str(2**63 - 1) in str(info.value)


def test_build_U_examples():
    assert build_U(1) == P("a^3 b^3 a^4 b^4") and build_U(1).length == 14
    u2 = build_U(2)
    assert u2.length == 2 * sum(range(5, 17)) == 252
    assert len(u2.syllables) == 2 * (16 - 4)
    assert build_U(1, AFFINE) == P("a^3 b^3")
    with pytest.raises(MagnitudeError):
        build_U(4, TOWER)


def test_longest_common_subword_examples():
    cw = CyclicWord
    assert longest_common_subword(cw(P("a^3 b^3")), cw(P("a^5")))[0] == 3
    w = cw(P("a^3 b^3 a^4 b^4"))
    assert longest_common_subword(w, w)[0] == 14
    # b^2 a^4 b^2 is cyclically a^4 b^4, which occurs whole in a^3 b^3 a^4 b^4
    assert longest_common_subword(w, cw(P("b^2 a^4 b^2")))[0] == 8


def test_caret_round_trip():
    for text in ["a^3 b^3 a^4 b^4", "x^-1 y^2 a", "1", "b^-1 a^-1"]:
        assert format_word(P(text)) == text
    assert P("a^(-1)b") == P("a^-1 b")
    assert P("ab") == P("a b")


def test_tower_scale_words_stay_cheap():
    big = Word([(0, 2**40), (1, 2**40)])
    assert big.length == 2**41
    assert concat(big, invert(big)) == Word.identity()
    with pytest.raises(MagnitudeError):
        Word([(0, 2**62), (0, 2**62)])


def test_alphabet_order():
    assert ABXY.letters() == [1, 2, 3, 4, -1, -2, -3, -4]
    assert sorted([P("a^-1"), P("b"), P("a"), P("b^-1")], key=shortlex_key) == \
        [P("a"), P("b"), P("a^-1"), P("b^-1")]


# --- properties --------------------------------------------------------------

@given(letters4)
def test_reduce_idempotent_and_matches_stack(seq):
    w = reduce(seq)
    assert reduce(list(w.letters())) == w
    assert list(w.letters()) == _naive_reduce(seq)


@given(reduced_words(), reduced_words())
def test_gromov_equals_common_prefix(h, k):
    hl, kl = list(h.letters()), list(k.letters())
    n = 0
    while n < min(len(hl), len(kl)) and hl[n] == kl[n]:
        n += 1
    assert gromov_product(h, k) == n == common_prefix_length(h, k)


@given(reduced_words(), reduced_words())
def test_concat_length_parity(u, v):
    w = concat(u, v)
    assert w.length <= u.length + v.length
    assert (w.length - u.length - v.length) % 2 == 0
    assert list(w.letters()) == _naive_reduce(list(u.letters()) + list(v.letters()))


@given(reduced_words(letters4).filter(bool))
def test_cyclic_reduce_reassembles(w):
    core, conj = cyclic_reduce(w)
    rep = core.representative
    assert rep.is_cyclically_reduced()
    assert -rep.first_letter() != rep.last_letter()
    assert concat(concat(invert(conj), rep), conj) == w
    # lex-least among all rotations
    assert all(shortlex_key(rep) <= shortlex_key(r) for r in core.rotations())


@given(reduced_words(letters4).filter(lambda w: bool(w) and w.is_cyclically_reduced()))
def test_min_rotation_conjugator(w):
    rep, c = min_rotation(w)
    assert concat(concat(invert(c), rep), c) == w
    assert rep.length == w.length


@given(reduced_words().filter(bool), st.integers(1, 4))
def test_proper_power_roundtrip(w, k):
    core, _ = cyclic_reduce(w)
    base = core.representative
    root, e = is_proper_power(base ** k)
    assert root ** e == base ** k
    assert e % k == 0


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 3))
def test_build_U_positive_cyclically_reduced(n, slope, offset):
    for s in (TOWER, GrowthSchedule("affine", slope, offset)):
        if s.kind == "tower" and n > 2:
            continue
        u = build_U(n, s)
        assert u.is_positive() and u.is_cyclically_reduced()
        assert len(u.syllables) == 2 * (s(n + 1) - s(n))


@given(reduced_words(letters4))
def test_format_parse_round_trip(w):
    assert parse_word(format_word(w)) == w


@given(reduced_words(letters4), st.integers(-20, 20))
def test_rotate_preserves_cyclic_class(w, k):
    if not w or not w.is_cyclically_reduced():
        return
    assert CyclicWord(rotate(w, k)) == CyclicWord(w)


def _brute_lcs(u: Word, v: Word) -> int:
    ul, vl = list(u.letters()), list(v.letters())
    rots_u = {tuple(ul[i:] + ul[:i]) for i in range(len(ul))}
    rots_v = {tuple(vl[i:] + vl[:i]) for i in range(len(vl))}
    subs_u = {r[i:j] for r in rots_u for i in range(len(r)) for j in range(i, len(r) + 1)}
    best = 0
    for r in rots_v:
        for i in range(len(r)):
            for j in range(i + best + 1, len(r) + 1):
                if r[i:j] in subs_u:
                    best = j - i
    return best


cyc = reduced_words(st.lists(st.sampled_from([1, 2, -1, -2]), min_size=1, max_size=9)).filter(
    lambda w: bool(w) and w.is_cyclically_reduced())


@settings(max_examples=150)
@given(cyc, cyc)
def test_longest_common_subword_matches_brute_force(u, v):
    n, (i, j) = longest_common_subword(CyclicWord(u), CyclicWord(v))
    assert n == _brute_lcs(u, v)
    ru = rotate(CyclicWord(u).representative, i)
    rv = rotate(CyclicWord(v).representative, j)
    assert list(ru.letters())[:n] == list(rv.letters())[:n]
