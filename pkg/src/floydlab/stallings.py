"""Folded subgroup graphs (Stallings core graphs) for subgroups of F(a, b)."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .words import ABXY, Alphabet, DegenerateInputError, Word, concat, invert, reduce

UNBOUNDED = math.inf


class FullGroupError(ValueError):
    """The subgroup is all of F2, so no exit direction exists."""


class SubgroupGraph:
    """A folded, cored, based graph with edges labelled by generators.

    ``adj[v]`` maps a signed letter code to the target vertex; an edge
    ``u --g--> v`` appears as ``adj[u][g+1] = v`` and ``adj[v][-(g+1)] = u``.
    """

    __slots__ = ("adj", "base", "rank_gens", "alphabet")

    def __init__(self, adj: Sequence[dict[int, int]], base: int = 0, rank_gens: int = 2,
                 alphabet: Alphabet = ABXY):
        self.adj = tuple(dict(d) for d in adj)
        self.base = base
        self.rank_gens = rank_gens
        self.alphabet = alphabet

    @classmethod
    def trivial(cls, rank_gens: int = 2) -> "SubgroupGraph":
        return cls([{}], 0, rank_gens)

    @property
    def num_vertices(self) -> int:
        return len(self.adj)

    def edges(self) -> list[tuple[int, int, int]]:
        return [(u, v, c - 1) for u, d in enumerate(self.adj) for c, v in d.items() if c > 0]

    @property
    def num_edges(self) -> int:
        return sum(1 for d in self.adj for c in d if c > 0)

    @property
    def rank(self) -> int:
        """Rank of the represented free subgroup."""
        return self.num_edges - self.num_vertices + 1

    def letters(self) -> list[int]:
        return [c for c in self.alphabet.letters() if abs(c) <= self.rank_gens]

    def read(self, w: Word, start: int | None = None) -> tuple[int, int]:
        """Follow ``w`` from ``start``; return (vertex reached, letters consumed)."""
        v = self.base if start is None else start
        n = 0
        for g, e in w.syllables:
            c = g + 1 if e > 0 else -(g + 1)
            for _ in range(abs(e)):
                t = self.adj[v].get(c)
                if t is None:
                    return v, n
                v = t
                n += 1
        return v, n

    def contains(self, w: Word) -> bool:
        v, n = self.read(w)
        return n == w.length and v == self.base

    def canonical(self) -> tuple:
        """Isomorphism-invariant description of the based labelled graph."""
        order = {self.base: 0}
        queue = deque([self.base])
        letters = self.letters()
        while queue:
            v = queue.popleft()
            for c in letters:
                t = self.adj[v].get(c)
                if t is not None and t not in order:
                    order[t] = len(order)
                    queue.append(t)
        return (len(order), tuple(sorted((order[u], order[v], g) for u, v, g in self.edges())))

    def distances_to_base(self) -> list[int]:
        dist = [-1] * self.num_vertices
        dist[self.base] = 0
        queue = deque([self.base])
        while queue:
            v = queue.popleft()
            for t in self.adj[v].values():
                if dist[t] < 0:
                    dist[t] = dist[v] + 1
                    queue.append(t)
        return dist

    def path_to(self, target: int) -> Word:
        """Shortlex-least word labelling a path from the basepoint to ``target``."""
        return invert(self.path_to_base(target))

    def path_to_base(self, start: int, dist: list[int] | None = None) -> Word:
        """Shortlex-least word labelling a path from ``start`` to the basepoint."""
        if dist is None:
            dist = self.distances_to_base()
        letters = self.letters()
        out = []
        v = start
        while v != self.base:
            for c in letters:
                t = self.adj[v].get(c)
                if t is not None and dist[t] == dist[v] - 1:
                    out.append(c)
                    v = t
                    break
        return reduce(out, self.alphabet)

    def generators(self) -> list[Word]:
        """A free basis read off a BFS spanning tree."""
        parent_word = {self.base: Word.identity(self.alphabet)}
        queue = deque([self.base])
        tree = set()
        letters = self.letters()
        while queue:
            v = queue.popleft()
            for c in letters:
                t = self.adj[v].get(c)
                if t is not None and t not in parent_word:
                    parent_word[t] = concat(parent_word[v], reduce([c], self.alphabet))
                    tree.add((v, c))
                    tree.add((t, -c))
                    queue.append(t)
        gens = []
        for u, v, g in self.edges():
            if (u, g + 1) in tree:
                continue
            step = Word([(g, 1)], self.alphabet)
            gens.append(concat(concat(parent_word[u], step), invert(parent_word[v])))
        return gens

    def to_json(self) -> dict:
        return {
            "vertices": self.num_vertices,
            "basepoint": self.base,
            "edges": [[u, v, self.alphabet.names[g]] for u, v, g in sorted(self.edges())],
        }

    @classmethod
    def from_json(cls, d: dict, alphabet: Alphabet = ABXY) -> "SubgroupGraph":
        adj: list[dict[int, int]] = [{} for _ in range(d["vertices"])]
        for u, v, name in d["edges"]:
            g = alphabet.names.index(name)
            adj[u][g + 1] = v
            adj[v][-(g + 1)] = u
        return cls(adj, d["basepoint"], alphabet=alphabet)

    def __repr__(self):
        return f"SubgroupGraph(V={self.num_vertices}, E={self.num_edges}, rank={self.rank})"


def fold(num_vertices: int, edges: Iterable[tuple[int, int, int]], base: int = 0,
         rank_gens: int = 2, order: Sequence[int] | None = None) -> SubgroupGraph:
    """Stallings-fold a labelled graph; ``order`` permutes edge insertion."""
    edges = list(edges)
    if order is not None:
        edges = [edges[i] for i in order]
    parent = list(range(num_vertices))
    adj: list[dict[int, int]] = [{} for _ in range(num_vertices)]
    pending: list[tuple[int, int]] = []

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def attach(u: int, c: int, v: int) -> None:
        u, v = find(u), find(v)
        w = adj[u].get(c)
        if w is None:
            adj[u][c] = v
        elif find(w) != v:
            pending.append((w, v))
        w = adj[v].get(-c)
        if w is None:
            adj[v][-c] = u
        elif find(w) != u:
            pending.append((w, u))

    def drain() -> None:
        while pending:
            x, y = pending.pop()
            x, y = find(x), find(y)
            if x == y:
                continue
            if y == find(base) or (x != find(base) and y < x):
                x, y = y, x
            parent[y] = x
            moved, adj[y] = adj[y], {}
            for c, t in moved.items():
                attach(x, c, t)

    for u, v, g in edges:
        attach(u, g + 1, v)
        drain()

    root = find(base)
    reps = sorted({find(v) for v in range(num_vertices)})
    # keep the component of the basepoint only
    comp = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for t in adj[v].values():
            t = find(t)
            if t not in comp:
                comp.add(t)
                queue.append(t)
    reps = [r for r in reps if r in comp]
    index = {r: i for i, r in enumerate(reps)}
    new_adj = [{c: index[find(t)] for c, t in adj[r].items()} for r in reps]
    return core(SubgroupGraph(new_adj, index[root], rank_gens))


def core(g: SubgroupGraph) -> SubgroupGraph:
    """Strip hanging trees, keeping the basepoint even at degree one."""
    adj = [dict(d) for d in g.adj]
    alive = [True] * len(adj)
    stack = [v for v in range(len(adj)) if v != g.base and len(adj[v]) <= 1]
    while stack:
        v = stack.pop()
        if not alive[v] or v == g.base or len(adj[v]) > 1:
            continue
        alive[v] = False
        for c, t in list(adj[v].items()):
            del adj[t][-c]
            if t != g.base and len(adj[t]) <= 1:
                stack.append(t)
        adj[v] = {}
    keep = [v for v in range(len(adj)) if alive[v]]
    index = {v: i for i, v in enumerate(keep)}
    return SubgroupGraph([{c: index[t] for c, t in adj[v].items()} for v in keep],
                         index[g.base], g.rank_gens, g.alphabet)


def from_generators(gens: Sequence[Word], rank_gens: int = 2,
                    order: Sequence[int] | None = None) -> SubgroupGraph:
    """Folded core graph of the subgroup generated by ``gens``."""
    if not gens:
        raise DegenerateInputError("empty generator list")
    edges: list[tuple[int, int, int]] = []
    n = 1
    for w in gens:
        if not w:
            continue
        letters = list(w.letters())
        prev = 0
        for i, c in enumerate(letters):
            nxt = 0 if i == len(letters) - 1 else n
            if nxt:
                n += 1
            if c > 0:
                edges.append((prev, nxt, c - 1))
            else:
                edges.append((nxt, prev, -c - 1))
            prev = nxt
    return fold(n, edges, 0, rank_gens, order)


def contains(g: SubgroupGraph, w: Word) -> bool:
    return g.contains(w)


def _product(g1: SubgroupGraph, g2: SubgroupGraph, starts=None):
    """Fiber product vertices/edges (all components, or those reachable from ``starts``)."""
    pos = [c for c in g1.letters() if c > 0]
    if starts is None:
        verts = [(u, v) for u in range(g1.num_vertices) for v in range(g2.num_vertices)]
    else:
        seen = set(starts)
        queue = deque(starts)
        while queue:
            u, v = queue.popleft()
            for c, t1 in g1.adj[u].items():
                t2 = g2.adj[v].get(c)
                if t2 is not None and (t1, t2) not in seen:
                    seen.add((t1, t2))
                    queue.append((t1, t2))
        verts = sorted(seen)
    vset = set(verts)
    edges = []
    for u, v in verts:
        for c in pos:
            t1, t2 = g1.adj[u].get(c), g2.adj[v].get(c)
            if t1 is not None and t2 is not None and (t1, t2) in vset:
                edges.append(((u, v), (t1, t2), c - 1))
    return verts, edges


def intersect(g1: SubgroupGraph, g2: SubgroupGraph) -> SubgroupGraph:
    """Core graph of ``g1 ∩ g2`` via the fiber-product component at (base, base)."""
    start = (g1.base, g2.base)
    verts, edges = _product(g1, g2, [start])
    index = {p: i for i, p in enumerate(verts)}
    adj: list[dict[int, int]] = [{} for _ in verts]
    for p, q, g in edges:
        adj[index[p]][g + 1] = index[q]
        adj[index[q]][-(g + 1)] = index[p]
    return core(SubgroupGraph(adj, index[start], g1.rank_gens, g1.alphabet))


@dataclass
class MalnormalityCertificate:
    verdict: bool
    witness: tuple[Word, Word, Word] | None = None  # (g, h, h') with g h g^-1 = h'
    census: list[dict] = field(default_factory=list)

    def verify(self, g: SubgroupGraph) -> bool:
        if self.witness is None:
            return self.verdict
        x, h, h2 = self.witness
        return (not g.contains(x) and bool(h) and g.contains(h) and g.contains(h2)
                and concat(concat(x, h), invert(x)) == h2)

    def to_json(self) -> dict:
        d = {"verdict": self.verdict, "census": self.census}
        if self.witness:
            d["witness"] = {k: str(w) for k, w in zip(("g", "h", "h_conj"), self.witness)}
        return d


def is_malnormal(g: SubgroupGraph) -> MalnormalityCertificate:
    """Decide malnormality from the self fiber product.

    Off-diagonal components must be trees; an essential loop in one yields
    an explicit conjugation witness.
    """
    verts, edges = _product(g, g)
    parent = {p: p for p in verts}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for p, q, _ in edges:
        a, b = find(p), find(q)
        if a != b:
            parent[a] = b
    comps: dict = {}
    for p in verts:
        c = comps.setdefault(find(p), {"vertices": 0, "edges": 0, "diagonal": False, "root": p})
        c["vertices"] += 1
        if p[0] == p[1]:
            c["diagonal"] = True
    for p, _, _ in edges:
        comps[find(p)]["edges"] += 1
    census = []
    witness = None
    for c in sorted(comps.values(), key=lambda c: c["root"]):
        betti = c["edges"] - c["vertices"] + 1
        census.append({"vertices": c["vertices"], "edges": c["edges"], "diagonal": c["diagonal"],
                       "betti": betti})
        if c["diagonal"]:
            if betti != g.rank:
                raise AssertionError("diagonal component carries extra loops")
        elif betti > 0 and witness is None:
            witness = _conjugation_witness(g, c["root"], edges, find)
    cert = MalnormalityCertificate(witness is None, witness, census)
    if witness is not None and not cert.verify(g):
        raise AssertionError("malnormality witness failed verification")
    return cert


def _conjugation_witness(g: SubgroupGraph, root, edges, find):
    comp_root = find(root)
    adj: dict = {}
    for p, q, lab in edges:
        if find(p) == comp_root:
            adj.setdefault(p, []).append((lab + 1, q))
            adj.setdefault(q, []).append((-(lab + 1), p))
    # BFS tree; the first non-tree edge closes an essential loop at root
    label = {root: []}
    tree_edges = set()
    queue = deque([root])
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for c, t in sorted(adj.get(v, []), key=lambda x: g.alphabet.letter_key(x[0])):
            if t not in label:
                label[t] = label[v] + [c]
                tree_edges.add((v, c, t))
                tree_edges.add((t, -c, v))
                queue.append(t)
    for v in order:
        for c, t in adj.get(v, []):
            if (v, c, t) in tree_edges:
                continue
            loop = reduce(label[v] + [c] + [-x for x in reversed(label[t])], g.alphabet)
            if not loop:
                continue
            u, w = root
            alpha, beta = g.path_to(u), g.path_to(w)
            x = concat(alpha, invert(beta))
            h = concat(concat(beta, loop), invert(beta))
            h2 = concat(concat(alpha, loop), invert(alpha))
            return x, h, h2
    raise AssertionError("no essential loop found in a non-tree component")


def longest_letter_run(g: SubgroupGraph, letter: int | str) -> float:
    """Largest m with letter^m a subword of a reduced element (``UNBOUNDED`` on a cycle)."""
    if isinstance(letter, str):
        letter = g.alphabet.letter(letter)
    c = abs(letter)
    best = 0
    seen = set()
    starts = [v for v in range(g.num_vertices) if -c not in g.adj[v]]
    for v in starts:
        n = 0
        seen.add(v)
        while c in g.adj[v]:
            v = g.adj[v][c]
            seen.add(v)
            n += 1
        best = max(best, n)
    # any vertex on a c-edge not reached from a chain start lies on a c-cycle
    for v in range(g.num_vertices):
        if c in g.adj[v] and v not in seen:
            return UNBOUNDED
    return best


def prefix_depth(g: SubgroupGraph, w: Word) -> int:
    """Length of the longest prefix of ``w`` readable from the basepoint, i.e. (w, H)_1."""
    return g.read(w)[1]


def shallowest_exit(g: SubgroupGraph) -> Word:
    """Lex-least word leaving the graph at minimal depth (geodesic, no backtracking)."""
    letters = g.letters()
    start = (g.base, 0)
    seen = {start}
    queue = deque([(start, [])])
    while queue:
        (v, arrival), path = queue.popleft()
        for c in letters:
            if arrival and c == -arrival:
                continue
            t = g.adj[v].get(c)
            if t is None:
                return reduce(path + [c], g.alphabet)
        for c in letters:
            if arrival and c == -arrival:
                continue
            t = g.adj[v][c]
            if (t, c) not in seen:
                seen.add((t, c))
                queue.append(((t, c), path + [c]))
    raise FullGroupError("subgroup graph has no exit: it is all of F2")
