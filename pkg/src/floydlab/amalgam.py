"""Word problem, normal forms and geodesics in the double G(n) = F(a,b) *_{K_n} F(x,y).

An element is an alternating list of syllables ``(side, word)``: side 0
words use a, b and side 1 words use x, y.  The amalgamated subgroup K is
read on both sides through the relabelling a <-> x, b <-> y, so every
membership or coset question is asked of the single core graph of K.

Geodesic lengths rely on the fact that a normal form in which every
adjacent pair of syllables is already as short as any reshuffle
``(v u)(u^-1 w)`` with ``u`` in K is a geodesic word.  A pair is shortened
in the Cayley tree of F(a, b): ``|v u| + |u^-1 w|`` is the length of the
path ``v^-1 -> u -> w``, which exceeds ``|v w|`` by twice the distance
from the K-orbit to the segment ``[v^-1, w]``.
"""
from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

from .stallings import SubgroupGraph
from .words import (ABXY, Word, concat, cyclic_reduce, format_word, invert, reduce,
                    rotate, shortlex_key)

AB, XY = 0, 1
SIDE_NAMES = ("AB", "XY")


class BudgetExceeded(RuntimeError):
    """Enumeration stopped at the configured budget; ``partial`` holds the census so far."""

    def __init__(self, msg: str, partial=None):
        super().__init__(msg)
        self.partial = partial


def side_of(w: Word) -> int:
    return AB if w.syllables[0][0] < 2 else XY


def to_ab(w: Word, side: int) -> Word:
    return w.relabel(-2) if side == XY else w


def from_ab(w: Word, side: int) -> Word:
    return w.relabel(2) if side == XY else w


@dataclass(frozen=True)
class DoublePresentation:
    """G(n) as a double of F(a, b) along the subgroup whose core graph is ``graph``."""

    graph: SubgroupGraph
    stage: int = 0
    label: str = ""

    @classmethod
    def trivial(cls) -> "DoublePresentation":
        return cls(SubgroupGraph.trivial(), 0, "free product")

    @classmethod
    def from_state(cls, state, n: int) -> "DoublePresentation":
        if n == 0:
            return cls.trivial()
        if n > state.stage:
            raise ValueError(f"stage {n} not built (state has {state.stage})")
        return cls(state.K(n), n, state.schedule.label())

    def in_K(self, w: Word, side: int) -> bool:
        return self.graph.contains(to_ab(w, side))


Syllable = tuple[int, Word]


@dataclass(frozen=True)
class AmalgamElement:
    """Alternating syllables; a single syllable may lie in K (or be empty for the identity)."""

    syllables: tuple[Syllable, ...]

    @property
    def normal_length(self) -> int:
        return len(self.syllables)

    @property
    def length(self) -> int:
        return sum(w.length for _, w in self.syllables)

    def is_identity(self) -> bool:
        return not self.syllables

    def word(self) -> Word:
        out = Word.identity()
        for _, w in self.syllables:
            out = concat(out, w)
        return out

    def __str__(self) -> str:
        if not self.syllables:
            return "1"
        return " | ".join(format_word(w) for _, w in self.syllables)


def _blocks(raw: Word) -> list[Syllable]:
    out: list[Syllable] = []
    for g, e in raw.syllables:
        side = AB if g < 2 else XY
        if out and out[-1][0] == side:
            out[-1] = (side, Word(out[-1][1].syllables + ((g, e),), ABXY, _trusted=True))
        else:
            out.append((side, Word(((g, e),), ABXY, _trusted=True)))
    return out


def _push(stack: list[Syllable], side: int, w: Word, P: DoublePresentation) -> None:
    """Multiply the normal form held in ``stack`` on the right by ``w`` (a one-sided word)."""
    while True:
        if not w:
            return
        if stack and stack[-1][0] == side:
            w = concat(stack.pop()[1], w)
            continue
        if stack and P.in_K(w, side):
            side = 1 - side
            w = from_ab(to_ab(w, 1 - side), side)
            continue
        if len(stack) == 1 and P.in_K(stack[0][1], stack[0][0]):
            s0, w0 = stack.pop()
            w = concat(from_ab(to_ab(w0, s0), side), w)
            continue
        stack.append((side, w))
        return


def to_normal_form(raw: Word, P: DoublePresentation, order: str = "left",
                   seed: int = 0) -> AmalgamElement:
    """Alternating normal form of ``raw``.

    ``order`` picks the reduction schedule: ``left`` and ``right`` sweep in
    one direction, ``random`` applies merges and flips in a seeded random
    order.  All orders give the same element and normal length.
    """
    if order == "left":
        stack: list[Syllable] = []
        for side, w in _blocks(raw):
            _push(stack, side, w, P)
        return AmalgamElement(tuple(stack))
    if order == "right":
        inv = to_normal_form(invert(raw), P, "left")
        return inverse(inv)
    if order == "random":
        return _random_reduce(_blocks(raw), P, random.Random(seed))
    raise ValueError(f"unknown order {order!r}")


def _random_reduce(blocks: list[Syllable], P: DoublePresentation, rnd: random.Random) -> AmalgamElement:
    blocks = list(blocks)
    while True:
        moves = []
        for i, (side, w) in enumerate(blocks):
            if not w:
                moves.append(("drop", i))
                continue
            if i + 1 < len(blocks) and blocks[i + 1][0] == side:
                moves.append(("merge", i))
            if len(blocks) > 1 and P.in_K(w, side):
                nbrs = [blocks[j][0] for j in (i - 1, i + 1) if 0 <= j < len(blocks)]
                if any(s != side for s in nbrs):
                    moves.append(("flip", i))
        if not moves:
            return AmalgamElement(tuple(blocks))
        kind, i = rnd.choice(moves)
        if kind == "drop":
            del blocks[i]
        elif kind == "merge":
            blocks[i:i + 2] = [(blocks[i][0], concat(blocks[i][1], blocks[i + 1][1]))]
        else:
            side, w = blocks[i]
            blocks[i] = (1 - side, from_ab(to_ab(w, side), 1 - side))


def inverse(e: AmalgamElement) -> AmalgamElement:
    return AmalgamElement(tuple((s, invert(w)) for s, w in reversed(e.syllables)))


def multiply(e: AmalgamElement, raw: Word, P: DoublePresentation) -> AmalgamElement:
    stack = list(e.syllables)
    for side, w in _blocks(raw):
        _push(stack, side, w, P)
    return AmalgamElement(tuple(stack))


# --- coset geometry in the Schreier graph of K ------------------------------------

def _coset_vertex(g: SubgroupGraph, w: Word) -> tuple[int, Word, Word]:
    """Locate the coset K w: (core vertex z, readable prefix p, hanging remainder r)."""
    z, n = g.read(w)
    return z, w.prefix(n), w.subword(n, w.length)


def coset_distance(g: SubgroupGraph, w: Word, dist: list[int] | None = None) -> int:
    """Length of the shortest element of the right coset K w."""
    if dist is None:
        dist = g.distances_to_base()
    z, _, r = _coset_vertex(g, w)
    return dist[z] + r.length


def shortest_in_left_coset(g: SubgroupGraph, v: Word, dist: list[int] | None = None) -> Word:
    """Shortlex-least element t of v K (words over a, b)."""
    z, _, r = _coset_vertex(g, invert(v))
    return concat(invert(r), g.path_to_base(z, dist))


def _all_shortest_paths_to_base(g: SubgroupGraph, z: int, dist: list[int], limit: int = 4096) -> list[Word]:
    out: list[list[int]] = [[]]
    for _ in range(dist[z]):
        nxt = []
        for path in out:
            v = z
            for c in path:
                v = g.adj[v][c]
            for c, t in g.adj[v].items():
                if dist[t] == dist[v] - 1:
                    nxt.append(path + [c])
        out = nxt[:limit]
    return [reduce(p) for p in out]


def coset_shorten(v: Word, side: int, P: DoublePresentation) -> tuple[int, Word]:
    """(min |v u| over u in K, a lex-least minimizing u on the side of v)."""
    if not v:
        return 0, Word.identity()
    g = P.graph
    va = to_ab(v, side)
    dist = g.distances_to_base()
    z, p, r = _coset_vertex(g, invert(va))
    best = dist[z] + r.length
    cands = []
    for q in _all_shortest_paths_to_base(g, z, dist):
        u = concat(p, q)
        cands.append(u)
    if best == v.length:
        cands.append(Word.identity())
    u = min(cands, key=shortlex_key)
    return best, from_ab(u, side)


def _pair_reduce(v: Word, sv: int, w: Word, sw: int, P: DoublePresentation
                 ) -> tuple[Word, Word, Word] | None:
    """Shorten ``(v u)(u^-1 w)`` over u in K; None if the pair is already minimal."""
    g = P.graph
    va, wa = to_ab(v, sv), to_ab(w, sw)
    vw = concat(va, wa)
    seg_start = invert(va)
    dist = g.distances_to_base()
    # walk the points v^-1 * prefix(vw, k) of the tree geodesic [v^-1, w] through
    # the Schreier graph: core vertex z plus a stack of hanging letters
    z, _, r = _coset_vertex(g, seg_start)
    hang = list(r.letters())
    best_k, best_d = 0, dist[z] + len(hang)
    for k, c in enumerate(vw.letters(), start=1):
        if hang and hang[-1] == -c:
            hang.pop()
        elif not hang and c in g.adj[z]:
            z = g.adj[z][c]
        else:
            hang.append(c)
        d = dist[z] + len(hang)
        if d < best_d:
            best_k, best_d = k, d
    target = vw.length + 2 * best_d
    if target >= va.length + wa.length:
        return None
    c = concat(seg_start, vw.prefix(best_k))
    z, p, _ = _coset_vertex(g, c)
    u = concat(p, g.path_to_base(z, dist))  # the K-element nearest to c
    return from_ab(u, sv), concat(va, u), concat(invert(u), wa)


@dataclass
class ReductionLog:
    rewrites: list[dict] = field(default_factory=list)


def reduce_normal_form(e: AmalgamElement, P: DoublePresentation,
                       log: ReductionLog | None = None) -> AmalgamElement:
    """Iterate pairwise reshuffles to a fixed point; every adjacent pair is then geodesic."""
    syl = list(e.syllables)
    if len(syl) < 2:
        return e
    changed = True
    while changed:
        changed = False
        for i in range(len(syl) - 1):
            (sv, v), (sw, w) = syl[i], syl[i + 1]
            res = _pair_reduce(v, sv, w, sw, P)
            if res is None:
                continue
            u, va, wa = res
            syl[i] = (sv, from_ab(va, sv))
            syl[i + 1] = (sw, from_ab(wa, sw))
            if log is not None:
                log.rewrites.append({"pair": i, "u": format_word(to_ab(u, sv)),
                                     "before": v.length + w.length,
                                     "after": va.length + wa.length})
            changed = True
    return AmalgamElement(tuple(syl))


def geodesic_length(e: AmalgamElement | Word, P: DoublePresentation) -> int:
    if isinstance(e, Word):
        e = to_normal_form(e, P)
    return reduce_normal_form(e, P).length


def geodesic_word(e: AmalgamElement | Word, P: DoublePresentation) -> Word:
    if isinstance(e, Word):
        e = to_normal_form(e, P)
    return reduce_normal_form(e, P).word()


def canonical_form(e: AmalgamElement, P: DoublePresentation) -> AmalgamElement:
    """Unique spelling: each syllable but the last is the shortlex-least word of its K-coset,
    the K-part being carried into the next syllable."""
    syl = e.syllables
    if len(syl) <= 1:
        if len(syl) == 1 and P.in_K(syl[0][1], syl[0][0]):
            s, w = syl[0]
            return AmalgamElement(((AB, to_ab(w, s)),))  # K elements are written on the AB side
        return e
    g = P.graph
    dist = g.distances_to_base()
    out = []
    carry = Word.identity()
    for i, (s, w) in enumerate(syl):
        cur = concat(from_ab(carry, s), w)
        if i == len(syl) - 1:
            out.append((s, cur))
            break
        t = shortest_in_left_coset(g, to_ab(cur, s), dist)
        carry = concat(invert(t), to_ab(cur, s))
        out.append((s, from_ab(t, s)))
    return AmalgamElement(tuple(out))


def canonical_key(e: AmalgamElement, P: DoublePresentation) -> tuple:
    return tuple((s, w.syllables) for s, w in canonical_form(e, P).syllables)


def canonical_string(e: AmalgamElement, P: DoublePresentation) -> str:
    return str(canonical_form(e, P))


def retract(w: Word) -> Word:
    """The homomorphism G(n) -> F(a, b) sending x -> a, y -> b."""
    return Word(((g % 2, e) for g, e in w.syllables), ABXY)


# --- balls ----------------------------------------------------------------------

LETTERS8 = tuple(reduce([c]) for c in ABXY.letters())


@dataclass
class Ball:
    presentation: DoublePresentation
    radius: int
    elements: dict  # canonical key -> (distance, AmalgamElement normal form, spelling Word)
    adj: dict | None = None  # canonical key -> [(letter code, key)], see ball(with_edges=True)

    def __len__(self) -> int:
        return len(self.elements)

    def sphere_sizes(self) -> list[int]:
        sizes = [0] * (self.radius + 1)
        for d, _, _ in self.elements.values():
            sizes[d] += 1
        return sizes

    def census(self) -> list[tuple[str, int]]:
        rows = [(str(canonical_form(e, self.presentation)), d, sp)
                for d, e, sp in self.elements.values()]
        rows.sort(key=lambda r: (r[1], shortlex_key(r[2])))
        return [(s, d) for s, d, _ in rows]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["canonical_form", "distance"])
            out.writerows(self.census())


def ball(P: DoublePresentation, radius: int, budget: int = 2_000_000,
         with_edges: bool = False) -> Ball:
    """All elements within ``radius`` of 1 with exact word-metric distances (BFS).

    With ``with_edges`` the Cayley edges inside the ball are kept in
    ``Ball.adj`` as (letter, key) lists.  Every relator of a double has even
    length, so the Cayley graph is bipartite and all edges join consecutive
    spheres; BFS therefore sees each of them.
    """
    ident = AmalgamElement(())
    k0 = canonical_key(ident, P)
    elements = {k0: (0, ident, Word.identity())}
    adj: dict | None = {k0: []} if with_edges else None
    frontier = [(k0, ident, Word.identity())]
    for d in range(1, radius + 1):
        nxt = []
        for k, e, spelling in frontier:
            for s in LETTERS8:
                f = multiply(e, s, P)
                key = canonical_key(f, P)
                if key not in elements:
                    sp = concat(spelling, s)
                    elements[key] = (d, f, sp)
                    nxt.append((key, f, sp))
                    if adj is not None:
                        adj[key] = []
                    if len(elements) > budget:
                        raise BudgetExceeded(f"ball exceeded {budget} elements at radius {d}",
                                             Ball(P, d, elements))
                if adj is not None and elements[key][0] == d:
                    g, x = s.syllables[0]
                    c = (g + 1) if x > 0 else -(g + 1)
                    adj[k].append((c, key))
                    adj[key].append((-c, k))
        frontier = nxt
    return Ball(P, radius, elements, adj)


# --- relators ---------------------------------------------------------------------

@dataclass
class Relator:
    word: Word
    stage: int
    w: Word
    shortened: bool
    rewrites: list[dict] = field(default_factory=list)
    properties: dict = field(default_factory=dict)

    @property
    def length(self) -> int:
        return self.word.length

    def to_json(self) -> dict:
        return {"stage": self.stage, "relator": format_word(self.word), "length": self.length,
                "w": format_word(self.w), "shortened": self.shortened,
                "rewrites": self.rewrites, "properties": self.properties}


def relator_shape_ok(R: Word) -> Word | None:
    """Return w if ``R = w^-1(x,y) w(a,b)``, else None."""
    blocks = _blocks(R)
    if len(blocks) != 2 or blocks[0][0] != XY:
        return None
    w = blocks[1][1]
    return w if to_ab(invert(blocks[0][1]), XY) == w else None


def build_relator(n: int, state) -> Relator:
    """R_n: cyclic reduction of a reduced normal form of g_n^-1(x,y) g_n(a,b) in G(n-1)."""
    if n < 1 or n > state.stage:
        raise ValueError(f"stage {n} missing (state has {state.stage})")
    g = state.generators[n - 1]
    P = DoublePresentation.from_state(state, n - 1)
    if P.graph.contains(g) and n > 1:
        raise ValueError(f"g_{n} lies in K_{n - 1}")
    raw = concat(from_ab(invert(g), XY), g)
    log = ReductionLog()
    e = reduce_normal_form(to_normal_form(raw, P), P, log)
    word = e.word()
    if not word.is_cyclically_reduced():
        core, _ = cyclic_reduce(word)
        word = core.representative
    w = relator_shape_ok(word)
    if w is None:
        raise AssertionError("relator lost the w^-1(x,y) w(a,b) shape")
    R = Relator(word, n, w, bool(log.rewrites), log.rewrites)
    R.properties["shape_w_inverse_xy_w_ab"] = True
    R.properties["cyclically_reduced"] = word.is_cyclically_reduced()
    return R


@dataclass
class GeodesicReport:
    checked: int
    total: int
    violations: list[dict]

    @property
    def inconclusive(self) -> bool:
        return self.checked < self.total

    @property
    def ok(self) -> bool:
        return not self.violations and not self.inconclusive

    def to_json(self) -> dict:
        return {"checked": self.checked, "total": self.total, "violations": self.violations,
                "inconclusive": self.inconclusive, "ok": self.ok}


def verify_cyclic_geodesic(R: Relator | Word, P: DoublePresentation,
                           max_conjugates: int | None = None) -> GeodesicReport:
    """Check that every cyclic conjugate of R is a geodesic word in G(P)."""
    word = R.word if isinstance(R, Relator) else R
    total = word.length
    limit = total if max_conjugates is None else min(total, max_conjugates)
    violations = []
    for k in range(limit):
        conj = rotate(word, k)
        e = reduce_normal_form(to_normal_form(conj, P), P)
        if e.length < conj.length:
            violations.append({"rotation": k, "length": conj.length, "geodesic": e.length,
                               "shorter": format_word(e.word())})
    return GeodesicReport(limit, total, violations)
