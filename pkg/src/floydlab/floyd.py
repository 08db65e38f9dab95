"""Floyd-rescaled word metrics on finite balls.

Edge weights are f(min(|u|, |v|)) for an edge u - v.  Geometric scaling
functions with rational ratio stay in exact Fractions throughout, so
equalities between Floyd lengths are tested exactly.  d_{f,kappa} is treated
as a value only; it does not satisfy the triangle inequality in general.
"""
from __future__ import annotations

import heapq
import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .amalgam import (DoublePresentation, ball, build_relator, canonical_key, geodesic_length,
                      to_normal_form)
from .words import Word, concat, format_word, invert, reduce


class PathError(ValueError):
    """Consecutive path vertices are not adjacent."""


class OutsideBall(KeyError):
    """A vertex lies outside the weighted ball."""


# --- scaling functions ------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFunction:
    """Summable positive f with f(n+1)/f(n) >= lam.

    kinds: ``geometric`` (f(n) = lam^n), ``polynomial`` (f(n) = (n+1)^-s,
    s > 1) and ``table`` (explicit values; evaluation past the end raises).
    """

    kind: str
    lam: Fraction | float
    s: Fraction | float | None = None
    values: tuple = ()

    @classmethod
    def geometric(cls, lam) -> "ScalingFunction":
        lam = Fraction(lam)
        if not 0 < lam < 1:
            raise ValueError("geometric ratio must lie in (0, 1)")
        return cls("geometric", lam)

    @classmethod
    def polynomial(cls, s) -> "ScalingFunction":
        s = Fraction(s) if isinstance(s, (int, Fraction, str)) else s
        if not s > 1:
            raise ValueError("polynomial exponent must exceed 1")
        return cls("polynomial", Fraction(1, 2) ** int(s) if s == int(s) else 0.5 ** float(s), s)

    @classmethod
    def table(cls, values: Sequence) -> "ScalingFunction":
        vals = tuple(Fraction(v) if not isinstance(v, float) else v for v in values)
        if not vals or any(v <= 0 for v in vals):
            raise ValueError("table values must be positive")
        ratios = [b / a for a, b in zip(vals, vals[1:])]
        if any(r > 1 for r in ratios):
            raise ValueError("table values must be non-increasing")
        return cls("table", min(ratios, default=1), None, vals)

    def __call__(self, n: int):
        if n < 0:
            raise ValueError("negative distance")
        if self.kind == "geometric":
            return self.lam ** n
        if self.kind == "polynomial":
            if isinstance(self.s, Fraction) and self.s.denominator == 1:
                return Fraction(1, (n + 1) ** int(self.s))
            return (n + 1) ** -float(self.s)
        if n >= len(self.values):
            raise ValueError(f"table has no value at {n}")
        return self.values[n]

    def ratio_ok(self, upto: int) -> bool:
        """f > 0 and f(n+1)/f(n) in [lam, 1] for n < upto."""
        return all(self(n) > 0 and self.lam <= self(n + 1) / self(n) <= 1 for n in range(upto))

    def total(self):
        """Sum of f over n >= 0 (exact for geometric, numeric otherwise)."""
        if self.kind == "geometric":
            return 1 / (1 - self.lam)
        if self.kind == "table":
            return sum(self.values)
        s = float(self.s)
        head = sum((n + 1) ** -s for n in range(10_000))
        return head + 10_000 ** (1 - s) / (s - 1)

    def tail(self, m: int, n: int):
        """sum_{i=m}^{n-1} f(i)."""
        return sum((self(i) for i in range(m, n)), Fraction(0))

    def to_json(self) -> dict:
        d = {"kind": self.kind, "lambda": str(self.lam)}
        if self.s is not None:
            d["s"] = str(self.s)
        if self.values:
            d["values"] = [str(v) for v in self.values]
        return d


# --- quasigeodesics ------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasiParams:
    """Quasigeodesic constants.

    ``multiplicative``: |t1-t2|/K - eps <= d <= K|t1-t2| + eps with K >= 1.
    ``lower-density``: lam|t1-t2| - eps <= d with lam in (0, 1].
    For unit-speed graph paths the upper inequality is automatic, so the
    conventions agree under lam = 1/K.
    """

    convention: str
    value: Fraction
    eps: Fraction

    @classmethod
    def multiplicative(cls, K, eps) -> "QuasiParams":
        K, eps = Fraction(K), Fraction(eps)
        if K < 1 or eps < 0:
            raise ValueError("need K >= 1 and eps >= 0")
        return cls("multiplicative", K, eps)

    @classmethod
    def lower_density(cls, lam, eps) -> "QuasiParams":
        lam, eps = Fraction(lam), Fraction(eps)
        if not 0 < lam <= 1 or eps < 0:
            raise ValueError("need lam in (0, 1] and eps >= 0")
        return cls("lower-density", lam, eps)

    @property
    def density(self) -> Fraction:
        return 1 / self.value if self.convention == "multiplicative" else self.value

    def to_multiplicative(self) -> "QuasiParams":
        return QuasiParams.multiplicative(1 / self.density, self.eps)

    def to_lower_density(self) -> "QuasiParams":
        return QuasiParams.lower_density(self.density, self.eps)

    def admits(self, dt: int, d: int) -> bool:
        if self.density * dt - self.eps > d:
            return False
        if self.convention == "multiplicative":
            return d <= self.value * dt + self.eps
        return True


def free_length(w: Word) -> int:
    return w.length


def group_length(P: DoublePresentation | None) -> Callable[[Word], int]:
    """Word-metric length oracle: free reduction, or the amalgam geodesic length."""
    if P is None:
        return free_length
    return lambda w: geodesic_length(w, P)


def _check_adjacent(path: Sequence[Word], length: Callable[[Word], int]) -> None:
    for u, v in zip(path, path[1:]):
        if length(concat(invert(u), v)) != 1:
            raise PathError(f"{format_word(u)} and {format_word(v)} are not adjacent")


def is_quasigeodesic(path: Sequence[Word], qp: QuasiParams,
                     length: Callable[[Word], int] = free_length) -> bool:
    """Check the quasigeodesic inequalities on all index pairs of a vertex path."""
    _check_adjacent(path, length)
    for i in range(len(path)):
        for j in range(i + 1, len(path)):
            if not qp.admits(j - i, length(concat(invert(path[i]), path[j]))):
                return False
    return True


def floyd_length(path: Sequence[Word], f: ScalingFunction,
                 length: Callable[[Word], int] = free_length):
    """Sum of f(min(|u|, |v|)) over consecutive vertices u, v of the path."""
    _check_adjacent(path, length)
    total = Fraction(0)
    ds = [length(v) for v in path]
    for a, b in zip(ds, ds[1:]):
        total += f(min(a, b))
    return total


def path_from_word(w: Word, start: Word | None = None) -> list[Word]:
    """Vertices start, start*w[:1], start*w[:2], ... (not reduced against start)."""
    start = Word.identity() if start is None else start
    return [concat(start, w.prefix(k)) for k in range(w.length + 1)]


# --- weighted balls ---------------------------------------------------------------------------

class WeightedBall:
    """Finite ball of a Cayley graph with Floyd edge weights; immutable once built."""

    def __init__(self, radius: int, f: ScalingFunction, keys: list, dist: list[int],
                 spell: list[Word], adj: list[list[tuple[int, int]]], key_of: Callable,
                 length: Callable[[Word], int], label: str):
        self.radius = radius
        self.f = f
        self.keys = keys
        self.index = {k: i for i, k in enumerate(keys)}
        self.dist = dist
        self.spell = spell
        self.adj = adj
        self._key_of = key_of
        self.length = length
        self.label = label
        self.presentation: DoublePresentation | None = None
        self._pair: dict = {}

    def __len__(self) -> int:
        return len(self.keys)

    @classmethod
    def free(cls, radius: int, f: ScalingFunction, rank: int = 2) -> "WeightedBall":
        letters = [g for g in range(1, rank + 1)] + [-g for g in range(1, rank + 1)]
        keys, dist, spell = [()], [0], [Word.identity()]
        index = {(): 0}
        adj: list[list] = [[]]
        frontier = [0]
        for d in range(1, radius + 1):
            nxt = []
            for i in frontier:
                k = keys[i]
                for c in letters:
                    if k and k[-1] == -c:
                        continue
                    nk = k + (c,)
                    j = len(keys)
                    keys.append(nk)
                    index[nk] = j
                    dist.append(d)
                    spell.append(reduce(list(nk)))
                    adj.append([(-c, i)])
                    adj[i].append((c, j))
                    nxt.append(j)
            frontier = nxt
        return cls(radius, f, keys, dist, spell, adj, lambda w: tuple(w.letters()), free_length,
                   f"F{rank}")

    @classmethod
    def amalgam(cls, P: DoublePresentation, radius: int, f: ScalingFunction,
                budget: int = 2_000_000) -> "WeightedBall":
        B = ball(P, radius, budget=budget, with_edges=True)
        keys = list(B.elements)
        index = {k: i for i, k in enumerate(keys)}
        dist = [B.elements[k][0] for k in keys]
        spell = [B.elements[k][2] for k in keys]
        adj = [[(c, index[t]) for c, t in B.adj[k]] for k in keys]
        wb = cls(radius, f, keys, dist, spell, adj,
                 lambda w: canonical_key(to_normal_form(w, P), P), group_length(P),
                 f"G({P.stage})")
        wb.presentation = P
        return wb

    def vertex(self, w: Word) -> int:
        k = self._key_of(w)
        if k not in self.index:
            raise OutsideBall(format_word(w))
        return self.index[k]

    def weight(self, i: int, j: int):
        return self.f(min(self.dist[i], self.dist[j]))

    def pair_distance(self, i: int, j: int) -> int:
        """Word-metric distance in the whole group (not only inside the ball)."""
        if i == j:
            return 0
        key = (i, j) if i < j else (j, i)
        if key not in self._pair:
            self._pair[key] = self.length(concat(invert(self.spell[i]), self.spell[j]))
        return self._pair[key]

    def exit_bound(self, i: int, j: int):
        """Floyd cost lower bound for any path i -> j that leaves the ball."""
        r = self.radius
        return self.f.tail(self.dist[i], r + 1) + self.f.tail(self.dist[j], r + 1)

    def dijkstra(self, src: int) -> tuple[list, list]:
        INF = None
        best = [INF] * len(self.keys)
        prev = [-1] * len(self.keys)
        best[src] = Fraction(0)
        heap = [(Fraction(0), src)]
        while heap:
            c, v = heapq.heappop(heap)
            if c != best[v]:
                continue
            for _, w in self.adj[v]:
                nc = c + self.weight(v, w)
                if best[w] is None or nc < best[w]:
                    best[w] = nc
                    prev[w] = v
                    heapq.heappush(heap, (nc, w))
        return best, prev

    def hops(self, src: int) -> list[int]:
        h = [-1] * len(self.keys)
        h[src] = 0
        dq = deque([src])
        while dq:
            v = dq.popleft()
            for _, w in self.adj[v]:
                if h[w] < 0:
                    h[w] = h[v] + 1
                    dq.append(w)
        return h


@dataclass
class FloydDistance:
    value: Fraction
    path: list[Word]
    exact: bool  # no path leaving the ball can be cheaper

    def to_json(self) -> dict:
        return {"value": str(self.value), "float": float(self.value), "exact": self.exact,
                "path": [format_word(w) for w in self.path]}


def floyd_distance_in_ball(p: Word, q: Word, B: WeightedBall) -> FloydDistance:
    """Weighted shortest path inside B; an upper bound on d_f, exact when flagged."""
    i, j = B.vertex(p), B.vertex(q)
    if i == j:
        return FloydDistance(Fraction(0), [B.spell[i]], True)
    best, prev = B.dijkstra(i)
    path = [j]
    while path[-1] != i:
        path.append(prev[path[-1]])
    path.reverse()
    value = best[j]
    return FloydDistance(value, [B.spell[v] for v in path], value <= B.exit_bound(i, j))


# --- controlled distance -----------------------------------------------------------------------

@dataclass
class ControlledResult:
    value: Fraction | None  # in-ball minimum (None: no admissible path in the ball)
    lower_bound: Fraction   # certified lower bound for the in-ball minimum
    inconclusive: bool      # node budget exhausted before the minimum was certified
    certificate: dict = field(default_factory=dict)
    path: tuple = ()        # witness as ball vertex indices

    def to_json(self) -> dict:
        return {"value": None if self.value is None else str(self.value),
                "lower_bound": str(self.lower_bound), "inconclusive": self.inconclusive,
                "certificate": self.certificate}


def controlled_floyd_distance(p: Word, q: Word, kappa: int, B: WeightedBall,
                              budget: int = 200_000) -> ControlledResult:
    """Least Floyd length over (kappa, kappa)-quasigeodesic paths p -> q inside B.

    A (kappa, kappa)-quasigeodesic of length L satisfies L/kappa - kappa <= d(p, q),
    so L <= kappa (d(p, q) + kappa) and the family is finite.  Best-first search
    uses the unconstrained in-ball Floyd distance to q as an admissible estimate;
    prefixes are pruned only when they already violate the two-point inequality
    or cannot reach q within the length cap.
    """
    i, j = B.vertex(p), B.vertex(q)
    d = B.pair_distance(i, j)
    cap = kappa * (d + kappa)
    h, _ = B.dijkstra(j)
    hop = B.hops(j)
    reach = (B.dist[i] + B.dist[j] + cap) // 2
    cert = {"kappa": kappa, "d": d, "length_cap": cap, "radius": B.radius,
            "contains_all_candidates": B.radius >= reach, "expanded": 0,
            "pruned_quasigeodesic": 0, "pruned_length": 0}
    if h[i] is None:
        return ControlledResult(None, Fraction(0), False, cert)
    k2 = kappa * kappa
    tie = itertools.count()
    heap = [(h[i], next(tie), Fraction(0), (i,))]
    while heap:
        est, _, g, path = heapq.heappop(heap)
        v = path[-1]
        if v == j:
            cert["witness"] = [format_word(B.spell[x]) for x in path]
            cert["witness_length"] = len(path) - 1
            cert["frontier_min"] = str(est)
            return ControlledResult(g, g, False, cert, path)
        cert["expanded"] += 1
        if cert["expanded"] > budget:
            cert["frontier_min"] = str(est)
            return ControlledResult(None, est, True, cert)
        t = len(path)
        for _, w in B.adj[v]:
            if hop[w] < 0 or t + hop[w] > cap:
                cert["pruned_length"] += 1
                continue
            ok = True
            for s in range(t - k2 - 1, -1, -1):
                need = Fraction(t - s, kappa) - kappa
                u = path[s]
                if abs(B.dist[u] - B.dist[w]) >= need:
                    continue
                if B.pair_distance(u, w) < need:
                    ok = False
                    break
            if not ok:
                cert["pruned_quasigeodesic"] += 1
                continue
            ng = g + B.weight(v, w)
            heapq.heappush(heap, (ng + h[w], next(tie), ng, path + (w,)))
    return ControlledResult(None, Fraction(0), False, cert)


# --- experiments ------------------------------------------------------------------------------

@dataclass
class RayReport:
    verdict: bool
    floyd_length: Fraction | None
    floyd_distance: Fraction | None
    reason: str = ""

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "reason": self.reason,
                "floyd_length": None if self.floyd_length is None else str(self.floyd_length),
                "floyd_distance": None if self.floyd_distance is None else str(self.floyd_distance)}


def ray_is_floyd_geodesic(ray: Word, B: WeightedBall) -> RayReport:
    """Floyd length of a geodesic prefix from 1 equals its in-ball Floyd distance."""
    verts = path_from_word(ray)
    try:
        idx = [B.vertex(v) for v in verts]
    except OutsideBall as exc:
        return RayReport(False, None, None, f"precondition: vertex {exc} outside ball")
    if any(B.dist[x] != k for k, x in enumerate(idx)):
        return RayReport(False, None, None, "precondition: prefix is not geodesic")
    lhs = sum((B.weight(a, b) for a, b in zip(idx, idx[1:])), Fraction(0))
    rhs = floyd_distance_in_ball(Word.identity(), ray, B).value
    return RayReport(lhs == rhs, lhs, rhs)


def random_geodesic(B: WeightedBall, depth: int, rng: random.Random) -> Word:
    """A random geodesic word of the given length, grown edge by edge outward."""
    v = 0
    for _ in range(depth):
        out = [w for _, w in B.adj[v] if B.dist[w] == B.dist[v] + 1]
        v = rng.choice(out)
    return B.spell[v]


def ray_prefix(g: Word, depth: int) -> Word:
    """First ``depth`` letters of g g g ... (g cyclically reduced)."""
    reps = depth // max(g.length, 1) + 1
    return (g ** reps).prefix(depth)


@dataclass
class SeparationCell:
    pair: str
    depth: int
    kappa: int
    result: ControlledResult
    excursion: int | None

    def row(self) -> dict:
        r = self.result
        return {"pair": self.pair, "depth": self.depth, "kappa": self.kappa,
                "lower_bound": str(r.lower_bound), "lower_bound_float": float(r.lower_bound),
                "value": "" if r.value is None else str(r.value),
                "inconclusive": r.inconclusive,
                "contains_all": r.certificate.get("contains_all_candidates", False),
                "excursion": "" if self.excursion is None else self.excursion}


@dataclass
class SeparationTable:
    cells: list[SeparationCell]
    radius: int

    def rows(self) -> list[dict]:
        return [c.row() for c in self.cells]

    def inconclusive_fraction(self) -> float:
        return sum(c.result.inconclusive for c in self.cells) / max(len(self.cells), 1)

    def consistent(self) -> bool:
        """Every conclusive value positive and at least half its depth-1 value."""
        base = {}
        for c in self.cells:
            if c.depth == 1 and not c.result.inconclusive:
                base[(c.pair, c.kappa)] = c.result.lower_bound
        for c in self.cells:
            if c.result.inconclusive or c.depth == 0:
                continue
            if c.result.lower_bound <= 0:
                return False
            b = base.get((c.pair, c.kappa))
            if b is not None and c.result.lower_bound < b / 2:
                return False
        return self.inconclusive_fraction() < 0.2


def _k2_distance(B: WeightedBall, K) -> list[int]:
    """In-ball hop distance to the K-points of the ball (an upper bound on the true distance)."""
    src = []
    P = B.presentation
    for v, sp in enumerate(B.spell):
        if P is None:
            w = sp if all(abs(c) <= 2 for c in sp.letters()) else None
        else:
            e = to_normal_form(sp, P)
            w = None
            if e.is_identity():
                w = Word.identity()
            elif len(e.syllables) == 1:
                side, u = e.syllables[0]
                w = u if side == 0 else u.relabel(-2)
        if w is not None and K.contains(w):
            src.append(v)
    h = [-1] * len(B)
    dq = deque(src)
    for s in src:
        h[s] = 0
    while dq:
        v = dq.popleft()
        for _, w in B.adj[v]:
            if h[w] < 0:
                h[w] = h[v] + 1
                dq.append(w)
    return h


def k2_rays(state) -> dict[str, Word]:
    g1, g2 = state.generators[0], state.generators[1]
    return {"g1": g1, "g1^-1": invert(g1), "g2": g2, "g2^-1": invert(g2)}


def separation_experiment(state, depths: Sequence[int], kappas: Sequence[int], f: ScalingFunction,
                          radius: int = 5, stage: int = 1, budget: int = 200_000,
                          B: WeightedBall | None = None) -> SeparationTable:
    """Controlled Floyd distances between points at equal depth on distinct K2 rays.

    Rays follow g1^{+-inf} and g2^{+-inf} in the Cayley graph of G(stage); the
    excursion column is the largest in-ball distance from K2 along the
    witness path.
    """
    if B is None:
        P = DoublePresentation.from_state(state, stage)
        B = WeightedBall.amalgam(P, radius, f)
    K = state.K(2)
    kdist = _k2_distance(B, K)
    rays = k2_rays(state)
    names = list(rays)
    cells = []
    for a, b in itertools.combinations(names, 2):
        for depth in depths:
            p, q = ray_prefix(rays[a], depth), ray_prefix(rays[b], depth)
            for kappa in kappas:
                res = controlled_floyd_distance(p, q, kappa, B, budget)
                exc = max(kdist[v] for v in res.path) if res.path else None
                cells.append(SeparationCell(f"{a}|{b}", depth, kappa, res, exc))
    return SeparationTable(cells, B.radius)


@dataclass
class DecayRow:
    stage: int
    relator_length: int
    detour: Fraction
    arc: Fraction
    antipode_distance: int
    normalized: Fraction | float

    def row(self) -> dict:
        return {"stage": self.stage, "relator_length": self.relator_length,
                "detour": str(self.detour), "detour_float": float(self.detour),
                "arc": str(self.arc), "antipode_distance": self.antipode_distance,
                "normalized": float(self.normalized)}


@dataclass
class DecayTable:
    rows_: list[DecayRow]

    def rows(self) -> list[dict]:
        return [r.row() for r in self.rows_]

    def consistent(self) -> bool:
        v = [r.detour for r in self.rows_]
        return (len(v) >= 2 and all(b < a for a, b in zip(v, v[1:]))
                and v[-1] < Fraction(1, 10) * v[0])


def collapse_experiment(state, stages: Sequence[int], f: ScalingFunction) -> DecayTable:
    """Detour Floyd lengths around the relator loops R_n.

    The loop of R_n = w(x,y)^-1 w(a,b) is placed with 1 at the middle of the
    w(a,b) arc.  p_n, q_n are the two ends of that arc and the detour runs
    from q_n to p_n along w(x,y)^-1, through the antipodal point of 1.
    Distances to 1 are exact word-metric distances in G(n).
    """
    rows = []
    total = f.total()
    for n in stages:
        R = build_relator(n, state)
        w = R.w
        m = w.length // 2
        loop = concat(concat(w.subword(m, w.length), R.word.prefix(R.length - w.length)), w.prefix(m))
        P = DoublePresentation.from_state(state, n)
        verts = path_from_word(loop)
        ds = [geodesic_length(v, P) for v in verts]
        if ds[-1] != 0:
            raise ValueError(f"R_{n} does not close up in G({n})")
        a, b = w.length - m, R.length - m
        detour = sum((f(min(ds[t], ds[t + 1])) for t in range(a, b)), Fraction(0))
        arc = sum((f(min(ds[t], ds[t + 1])) for t in itertools.chain(range(0, a), range(b, R.length))),
                  Fraction(0))
        anti = ds[a + (b - a) // 2]
        norm = detour / total
        rows.append(DecayRow(n, R.length, detour, arc, anti, norm))
    return DecayTable(rows)


def bigon_separation_free(p: Word, q: Word, f: ScalingFunction):
    """Floyd length of the unique geodesic p -> q in a free group."""
    w = concat(invert(p), q)
    verts = path_from_word(w, p)
    verts = [reduce(list(v.letters())) for v in verts]
    return floyd_length(verts, f)

