"""Pieces and small-cancellation certificates.

Classical pieces are common prefixes of two distinct members of a
symmetrized set; the scan runs on syllables.  Graded c(p) works on roses
whose petals are linear words.  epsilon-pieces and the relative condition
C(eps, mu, rho) use the exact word problem of the stage group.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .amalgam import (BudgetExceeded, DoublePresentation, ball, canonical_key,
                      multiply, to_normal_form, verify_cyclic_geodesic)
from .words import (CyclicWord, DegenerateInputError, GrowthSchedule, Word, concat,
                    format_word, invert, is_proper_power, reduce, rotate)

ALPHA = Fraction(1, 100)
K_CONST = 10**6


# --- symmetrized sets and classical pieces ---------------------------------------

@dataclass
class Member:
    word: Word  # a fixed linearization of the cyclic word
    owners: list = field(default_factory=list)  # (relator, orientation)


class SymmetrizedSet:
    """Closure of the relators under inversion and cyclic shift, kept lazily as cyclic words."""

    def __init__(self, relators: Sequence[Word], grades: Sequence[int] | None = None):
        rels = []
        for r in relators:
            if not r:
                raise DegenerateInputError("empty relator")
            if not r.is_cyclically_reduced():
                raise DegenerateInputError(f"relator {r} is not cyclically reduced")
            if is_proper_power(r)[1] > 1:
                raise DegenerateInputError(f"relator {r} is a proper power")
            rels.append(r)
        self.relators = tuple(rels)
        self.grades = tuple(grades) if grades is not None else tuple(1 for _ in rels)
        seen: dict = {}
        members = []
        for i, r in enumerate(rels):
            for o, w in ((1, r), (-1, invert(r))):
                cw = CyclicWord(w)
                if cw not in seen:
                    seen[cw] = Member(w)
                    members.append(seen[cw])
                m = seen[cw]
                if (i, o) not in m.owners:
                    m.owners.append((i, o))
        self.members = tuple(members)

    def words(self) -> list[Word]:
        """Every element of the (finite) symmetrized set, expanded."""
        out = []
        for m in self.members:
            out.extend(rotate(m.word, k) for k in range(m.word.length))
        return out


def _cyc_syllables(w: Word) -> tuple[list[tuple[int, int]], list[int]]:
    syl = list(w.syllables)
    offset = 0
    if len(syl) > 1 and syl[0][0] == syl[-1][0]:
        last = syl.pop()
        syl[0] = (syl[0][0], syl[0][1] + last[1])
        offset = -abs(last[1])
    starts = []
    pos = offset
    for _, e in syl:
        starts.append(pos % w.length)
        pos += abs(e)
    return syl, starts


def _same_letter(s, t) -> bool:
    return s[0] == t[0] and (s[1] > 0) == (t[1] > 0)


def _pair_matches(u: Word, v: Word, same: bool) -> list[tuple[int, int, int]]:
    """Maximal common subwords of the cyclic words u, v as (length, offset in u, offset in v).

    With ``same`` set, u and v are the same member and coinciding positions
    are skipped.
    """
    su, pu = _cyc_syllables(u)
    sv, pv = _cyc_syllables(v)
    nu, nv = len(su), len(sv)
    cap = min(u.length, v.length)
    out = []
    for i in range(nu):
        ei = abs(su[i][1])
        for j in range(nv):
            if not _same_letter(su[i], sv[j]):
                continue
            fj = abs(sv[j][1])
            # inside single syllables
            if same and i == j:
                if nu > 1 and ei > 1:
                    out.append((ei - 1, pu[i], (pv[j] + 1) % v.length))
            else:
                m = min(ei, fj, cap)
                out.append((m, (pu[i] + ei - m) % u.length, (pv[j] + fj - m) % v.length))
            # across the aligned boundaries after syllables i and j
            if nu == 1 or nv == 1 or (same and i == j):
                continue
            if not _same_letter(su[(i + 1) % nu], sv[(j + 1) % nv]):
                continue
            back = min(ei, fj)
            total = back
            k = 1
            while k <= nu + nv and total < cap:
                a, b = su[(i + k) % nu], sv[(j + k) % nv]
                if not _same_letter(a, b):
                    break
                if a[1] != b[1]:
                    total += min(abs(a[1]), abs(b[1]))
                    break
                total += abs(a[1])
                k += 1
            total = min(total, cap)
            out.append((total, (pu[i] + ei - back) % u.length, (pv[j] + fj - back) % v.length))
    return out


@dataclass
class PieceTable:
    per_relator: list[int]
    locations: list[dict | None]
    pieces: list[set]  # longest pieces of each relator, as words

    @property
    def global_max(self) -> int:
        return max(self.per_relator, default=0)

    def to_json(self) -> dict:
        return {"per_relator": self.per_relator, "global_max": self.global_max,
                "locations": self.locations,
                "longest_pieces": [sorted(format_word(w) for w in s) for s in self.pieces]}


def classical_pieces(S: SymmetrizedSet | Sequence[Word]) -> PieceTable:
    """Longest piece of each relator, computed on syllables."""
    if not isinstance(S, SymmetrizedSet):
        S = SymmetrizedSet(S)
    n = len(S.relators)
    best = [0] * n
    locs: list[dict | None] = [None] * n
    pieces: list[set] = [set() for _ in range(n)]
    for a, ma in enumerate(S.members):
        for b, mb in enumerate(S.members):
            for length, i, j in _pair_matches(ma.word, mb.word, a == b):
                if length == 0:
                    continue
                for r, orient in ma.owners:
                    piece = rotate(ma.word, i).prefix(length)
                    if orient < 0:
                        piece = invert(piece)
                    if length > best[r]:
                        best[r] = length
                        pieces[r] = {piece}
                        locs[r] = {"member": a, "offset": i, "partner": b, "partner_offset": j,
                                   "piece": format_word(piece)}
                    elif length == best[r]:
                        pieces[r].add(piece)
    return PieceTable(best, locs, pieces)


def pair_pieces(R: Word, Rp: Word) -> tuple[int, set]:
    """Longest common cyclic subwords of R and R' (distinct positions if R == R')."""
    same = CyclicWord(R) == CyclicWord(Rp)
    u = CyclicWord(R).representative
    v = u if same else CyclicWord(Rp).representative
    best, words = 0, set()
    for length, i, _ in _pair_matches(u, v, same):
        if length > best:
            best, words = length, set()
        if length == best and length:
            words.add(rotate(u, i).prefix(length))
    return best, words


def classical_cp_count(w: Word, S: SymmetrizedSet) -> int | None:
    """Least number of pieces whose concatenation is a cyclic conjugate of w (None if impossible)."""
    L = w.length
    best = None
    lengths = []
    words = [x for x in S.words()]
    for k in range(L):
        r = rotate(w, k)
        rl = tuple(r.letters())
        m = 0
        for x in words:
            if x == r:
                continue
            xl = tuple(x.letters())
            n = 0
            while n < min(len(rl), len(xl)) and rl[n] == xl[n]:
                n += 1
            m = max(m, n)
        lengths.append(m)
    for start in range(L):
        pos, count = 0, 0
        while pos < L:
            step = lengths[(start + pos) % L]
            if step == 0:
                count = None
                break
            pos += min(step, L - pos)
            count += 1
        if count is not None and (best is None or count < best):
            best = count
    return best


# --- graded c(p) on roses -----------------------------------------------------------

@dataclass
class GradedRose:
    """A rose whose petals carry words in F(a, b) and grades; it maps to Rose(F2) letterwise."""

    petals: list[Word]
    grades: list[int]

    def __post_init__(self):
        if len(self.petals) != len(self.grades):
            raise ValueError("one grade per petal")
        if any(not p for p in self.petals):
            raise DegenerateInputError("empty petal")

    @classmethod
    def from_state(cls, state, n: int | None = None) -> "GradedRose":
        n = state.stage if n is None else n
        return cls(list(state.generators[:n]), list(range(1, n + 1)))


def _lcp(x: tuple, i: int, y: tuple, j: int) -> int:
    n = 0
    lim = min(len(x) - i, len(y) - j)
    while n < lim and x[i + n] == y[j + n]:
        n += 1
    return n


def shape_of(w: Word) -> str:
    s = w.syllables
    if len(s) == 2 and all(e > 0 for _, e in s):
        (g1, e1), (g2, e2) = s
        if (g1, g2) == (0, 1) and e1 == e2:
            return "a^m b^m"
        if (g1, g2) == (1, 0) and e2 == e1 + 1:
            return "b^m a^(m+1)"
    return "other"


@dataclass
class EdgeReport:
    petal: int
    grade: int
    min_pieces: int | None  # None: the petal is not a concatenation of pieces at all
    tiling: list[dict]
    min_top_grade_pieces: int | None
    maximal_top_pieces: list[dict]

    def to_json(self) -> dict:
        return self.__dict__.copy()


@dataclass
class GradedCPReport:
    p: int
    verdict: bool
    edges: list[EdgeReport]

    def to_json(self) -> dict:
        return {"p": self.p, "verdict": self.verdict, "edges": [e.to_json() for e in self.edges]}


def graded_cp_check(m: GradedRose, p: int) -> GradedCPReport:
    """Graded c(p): no petal J is a concatenation of fewer than p pieces of grade <= g(J).

    A piece of J is a subpath that also occurs at a different place in some
    petal (either direction); its grade is the least grade of such a petal.
    The report also carries, per petal, the least number of top-grade pieces
    over all tilings and the maximal top-grade pieces with their shapes.
    """
    occ = []
    for k, (w, g) in enumerate(zip(m.petals, m.grades)):
        occ.append((k, 1, tuple(w.letters()), g))
        occ.append((k, -1, tuple(invert(w).letters()), g))
    edges = []
    verdict = True
    for k, (w, g) in enumerate(zip(m.petals, m.grades)):
        J = tuple(w.letters())
        L = len(J)
        grades_below = sorted({t for t in m.grades if t <= g})
        # reach[t][i]: longest piece starting at i occurring in petals of grade <= t
        reach = {t: [0] * L for t in grades_below}
        for i in range(L):
            for kk, o, W, t in occ:
                if t > g:
                    continue
                for j in range(len(W)):
                    if kk == k and o == 1 and j == i:
                        continue
                    n = _lcp(J, i, W, j)
                    if n:
                        for tt in grades_below:
                            if tt >= t and n > reach[tt][i]:
                                reach[tt][i] = n
        top = reach[g]
        lower = reach[grades_below[-2]] if len(grades_below) > 1 else [0] * L

        def grade_of(i, n):
            for tt in grades_below:
                if reach[tt][i] >= n:
                    return tt
            return g

        # farthest-jump greedy is optimal because i + top[i] never decreases
        tiling, pos, count = [], 0, 0
        while pos < L:
            n = top[pos]
            if n == 0:
                count = None
                break
            piece = reduce(list(J[pos:pos + n]))
            tiling.append({"start": pos, "piece": format_word(piece), "length": n,
                           "grade": grade_of(pos, n), "shape": shape_of(piece)})
            pos += n
            count += 1
        # least number of top-grade pieces over all tilings
        INF = math.inf
        best = [INF] * (L + 1)
        best[L] = 0
        for i in range(L - 1, -1, -1):
            for n in range(1, top[i] + 1):
                c = best[i + n] + (1 if n > lower[i] else 0)
                if c < best[i]:
                    best[i] = c
        literal = None if best[0] == INF else int(best[0])
        maximal = []
        for i in range(L):
            n = top[i]
            if n == 0 or n <= lower[i]:
                continue
            if i > 0 and top[i - 1] >= n + 1:
                continue
            piece = reduce(list(J[i:i + n]))
            maximal.append({"start": i, "piece": format_word(piece), "length": n,
                            "shape": shape_of(piece)})
        edges.append(EdgeReport(k, g, count, tiling, literal, maximal))
        if count is not None and count < p:
            verdict = False
    return GradedCPReport(p, verdict, edges)


def malnormal_by_graded_c5(state, n: int | None = None) -> bool | None:
    """True when graded c(5) holds for Rose(K_n) -> Rose(F2); None when it does not decide."""
    return True if graded_cp_check(GradedRose.from_state(state, n), 5).verdict else None


# --- epsilon-pieces and C(eps, mu, rho) -------------------------------------------------

@dataclass
class EpsilonPieceReport:
    eps: int
    pieces: list[dict]
    max_length: int
    inconclusive: bool = False
    note: str = ""

    def to_json(self) -> dict:
        return self.__dict__.copy()


def _prefix_elements(w: Word, P: DoublePresentation, upto: int):
    """Normal forms of the prefixes w[:0..upto]."""
    e = to_normal_form(Word.identity(), P)
    out = [e]
    for c in list(w.letters())[:upto]:
        e = multiply(e, reduce([c]), P)
        out.append(e)
    return out


def epsilon_pieces(R: Word, Rp: Word, eps: int, P: DoublePresentation,
                   budget: int = 20_000, work: int = 2_000_000) -> EpsilonPieceReport:
    """All maximal eps-pieces U of R against the cyclic shifts of R'^{+-1}.

    U is a prefix of a cyclic shift R_i of R, U' a prefix of a cyclic shift
    R'_j, and U' = Y U Z in the group with |Y|, |Z| <= eps and
    Y R_i Y^-1 != R'_j.  ``budget`` bounds the eps-ball and ``work`` the
    number of Y U Z products; past either the report is marked inconclusive
    and its lengths are only what was found so far.
    """
    try:
        B = ball(P, eps, budget=budget)
    except BudgetExceeded:
        return EpsilonPieceReport(eps, [], 0, True, f"eps-ball larger than {budget}")
    Y_list = [(e, sp) for d, e, sp in B.elements.values()]
    # prefix tables alone cost |R|^2 + 2|R'|^2 products
    upfront = R.length ** 2 + 2 * Rp.length ** 2
    if upfront > work:
        return EpsilonPieceReport(eps, [], 0, True, f"prefix tables need {upfront} > {work} products")
    shifts = [rotate(R, i) for i in range(R.length)]
    partners = []
    for o, base in ((1, Rp), (-1, invert(Rp))):
        for j in range(base.length):
            partners.append((o, j, rotate(base, j)))
    # keys of all partner prefixes U'
    uprime: dict = {}
    for o, j, Wp in partners:
        for lp, e in enumerate(_prefix_elements(Wp, P, Wp.length)):
            if lp == 0:
                continue
            uprime.setdefault(canonical_key(e, P), []).append((o, j, lp))
    conj_cache: dict = {}

    def differs(Y: Word, i: int, o: int, j: int) -> bool:
        key = (Y, i)
        if key not in conj_cache:
            conj_cache[key] = canonical_key(to_normal_form(concat(concat(Y, shifts[i]), invert(Y)), P), P)
        Wp = partners[[(pp[0], pp[1]) for pp in partners].index((o, j))][2]
        return conj_cache[key] != canonical_key(to_normal_form(Wp, P), P)

    best_at = [0] * R.length
    witness: list[dict | None] = [None] * R.length
    spent = upfront
    for i, Ri in enumerate(shifts):
        prefixes = _prefix_elements(Ri, P, Ri.length)
        for ell in range(Ri.length, 0, -1):
            if ell <= best_at[i]:
                break
            U = prefixes[ell]
            found = None
            for Ye, Ysp in Y_list:
                YU = multiply(Ye, U.word(), P)
                spent += len(Y_list)
                if spent > work:
                    return EpsilonPieceReport(eps, [w for w in witness if w], max(best_at), True,
                                              f"more than {work} products")
                for Ze, Zsp in Y_list:
                    key = canonical_key(multiply(YU, Zsp, P), P)
                    for o, j, lp in uprime.get(key, ()):
                        if abs(lp - ell) > 2 * eps:
                            continue
                        if differs(Ysp, i, o, j):
                            found = {"offset": i, "length": ell, "piece": format_word(Ri.prefix(ell)),
                                     "partner_orientation": o, "partner_offset": j,
                                     "partner_length": lp, "Y": format_word(Ysp),
                                     "Z": format_word(Zsp)}
                            break
                    if found:
                        break
                if found:
                    break
            if found:
                best_at[i] = ell
                witness[i] = found
                break
    pieces = []
    for i in range(R.length):
        n = best_at[i]
        if n == 0:
            continue
        if best_at[(i - 1) % R.length] >= n + 1:
            continue  # extends to the left
        pieces.append(witness[i])
    return EpsilonPieceReport(eps, pieces, max(best_at, default=0))


@dataclass
class RSCReport:
    eps: int
    mu: Fraction
    rho: int
    clauses: dict  # RSC1/2/3 -> "pass" | "fail" | "inconclusive"
    details: dict

    @property
    def verdict(self) -> str:
        vals = set(self.clauses.values())
        if "fail" in vals:
            return "fail"
        if "inconclusive" in vals:
            return "inconclusive"
        return "pass"

    def to_json(self) -> dict:
        return {"eps": self.eps, "mu": str(self.mu), "rho": self.rho, "clauses": self.clauses,
                "verdict": self.verdict, "details": self.details}


def check_RSC(relators: Sequence[Word], eps: int, mu, rho: int, P: DoublePresentation,
              budget: int = 20_000, work: int = 2_000_000) -> RSCReport:
    """Relative small cancellation C(eps, mu, rho) of the symmetrized relators over G(P)."""
    mu = Fraction(mu).limit_denominator(10**12) if not isinstance(mu, Fraction) else mu
    clauses, details = {}, {}
    geo = [verify_cyclic_geodesic(r, P) for r in relators]
    clauses["RSC1"] = "pass" if all(g.ok for g in geo) else (
        "inconclusive" if any(g.inconclusive for g in geo) and not any(g.violations for g in geo) else "fail")
    details["RSC1"] = [g.to_json() for g in geo]
    lengths = [r.length for r in relators]
    clauses["RSC2"] = "pass" if min(lengths) >= rho else "fail"
    details["RSC2"] = {"lengths": lengths, "rho": rho}
    state, rows = "pass", []
    for a, R in enumerate(relators):
        for b, Rp in enumerate(relators):
            rep = epsilon_pieces(R, Rp, eps, P, budget, work)
            ok = rep.max_length <= mu * R.length
            rows.append({"R": a, "R'": b, "max_piece": rep.max_length,
                         "bound": str(mu * R.length), "ok": ok, "inconclusive": rep.inconclusive})
            if not ok:
                state = "fail"  # pieces found so far are genuine
            elif rep.inconclusive and state == "pass":
                state = "inconclusive"
    clauses["RSC3"] = state
    details["RSC3"] = rows
    return RSCReport(eps, mu, rho, clauses, details)


# --- GSC ladder -------------------------------------------------------------------------

@dataclass
class ScheduleParams:
    """Per-grade (eps_n, mu_n, rho_n), n = 1..m, with the constants alpha and K."""

    eps: list
    mu: list
    rho: list
    alpha: Fraction = ALPHA
    K: int = K_CONST
    delta0: float | None = None

    def __post_init__(self):
        if not (len(self.eps) == len(self.mu) == len(self.rho)):
            raise ValueError("eps, mu, rho must have one entry per grade")
        if any(e <= 0 for e in self.eps) or any(r <= 0 for r in self.rho):
            raise ValueError("eps and rho must be positive")
        if any(not 0 < m < 1 for m in self.mu):
            raise ValueError("mu must lie in (0, 1)")

    def to_json(self) -> dict:
        return {"eps": [str(e) for e in self.eps], "mu": [str(m) for m in self.mu],
                "rho": [str(r) for r in self.rho], "alpha": str(self.alpha), "K": self.K,
                "delta0": self.delta0}


def standard_schedule(relator_lengths: Sequence[int], schedule_values: Sequence[int], k: int = 1
                   ) -> ScheduleParams:
    """The schedule used in the graded small cancellation argument.

    ``relator_lengths[i]`` is |R_{i+1}| and ``schedule_values[i]`` is the
    value s(i+1).  Grades n = 1..m use R_{n+k}; rho_0 is taken to be |R_k|.
    """
    m = len(relator_lengths) - k
    if m < 1:
        raise ValueError("need at least one relator beyond the base stage")
    rho = [relator_lengths[n + k - 1] for n in range(0, m + 1)]  # rho[0] = |R_k|
    eps = [10 * rho[n - 1] for n in range(1, m + 1)]
    mu = []
    for n in range(1, m + 1):
        a = Fraction(2 * schedule_values[n + k - 1] + 20 * rho[n - 1], rho[n])
        b = Fraction(10**7 * rho[n - 1], rho[n])
        mu.append(2 * max(a, b))
    return _unchecked(eps, mu, rho[1:])


def _unchecked(eps, mu, rho) -> ScheduleParams:
    p = object.__new__(ScheduleParams)
    p.eps, p.mu, p.rho = list(eps), list(mu), list(rho)
    p.alpha, p.K, p.delta0 = ALPHA, K_CONST, None
    return p


@dataclass
class LadderReport:
    clauses: dict
    rows: list[dict]

    def to_json(self) -> dict:
        return {"clauses": self.clauses, "rows": self.rows}


def check_GSC_schedule(grade_lengths: Sequence[Sequence[int]], params: ScheduleParams,
                       rsc: Sequence[RSCReport] | None = None) -> LadderReport:
    """GSC0..GSC3 for grades 1..m; ``grade_lengths[n-1]`` lists |R| for R in grade n."""
    m = len(params.rho)
    rows = []
    gsc1 = gsc2 = "pass"
    for n in range(1, m + 1):
        row = {"n": n, "eps": str(params.eps[n - 1]), "mu": str(params.mu[n - 1]),
               "rho": str(params.rho[n - 1])}
        if n < m:
            lhs, rhs = params.eps[n], 8 * max(grade_lengths[n - 1])
            row["GSC1"] = {"eps_next": str(lhs), "8max|R|": rhs, "ok": lhs > rhs}
            if not lhs > rhs:
                gsc1 = "fail"
        mu_n = Fraction(params.mu[n - 1]) if not isinstance(params.mu[n - 1], float) else params.mu[n - 1]
        ok_alpha = mu_n <= params.alpha
        ok_k = mu_n * params.rho[n - 1] > params.K * params.eps[n - 1]
        row["GSC2"] = {"mu<=alpha": ok_alpha, "mu*rho>K*eps": ok_k,
                       "mu*rho": str(mu_n * params.rho[n - 1]),
                       "K*eps": str(params.K * params.eps[n - 1])}
        if not (ok_alpha and ok_k):
            gsc2 = "fail"
        rows.append(row)
    mus = [Fraction(x) if not isinstance(x, float) else x for x in params.mu]
    clauses = {
        "GSC0": "assumed" + ("" if params.delta0 is None else f" (delta0={params.delta0})"),
        "GSC1": gsc1 if m > 1 else "vacuous",
        "GSC2": gsc2,
        "mu_nonincreasing": all(b <= a for a, b in zip(mus, mus[1:])),
    }
    if rsc is not None:
        vs = [r.verdict for r in rsc]
        clauses["GSC3"] = "fail" if "fail" in vs else ("inconclusive" if "inconclusive" in vs else "pass")
    else:
        clauses["GSC3"] = "not run"
    return LadderReport(clauses, rows)


def delta_bound(lengths: Sequence[int]) -> int:
    """Hyperbolicity constant bound 4 * max |R| for one grade."""
    if not lengths:
        raise DegenerateInputError("grade has no relators")
    return 4 * max(lengths)


def epsilon_piece_estimate(classical_max: int, eps: int, delta_prev: int) -> int:
    """Upper estimate |U| < classical_max + 2(eps + 4 delta) for eps-pieces."""
    return classical_max + 2 * (eps + 4 * delta_prev)


# --- Property 4 ---------------------------------------------------------------------------

@dataclass
class Property4Report:
    stage: int
    exempt: bool
    predicted_length: int | None
    predicted_piece: str | None
    measured_length: int
    measured_pieces: list[str]
    verdict: str

    def to_json(self) -> dict:
        return self.__dict__.copy()


def property4_check(R, schedule: GrowthSchedule, N: int | None = None) -> Property4Report:
    """Compare the largest classical piece of R_n with 2 s - 1, s the top exponent of U(N(n-1)).

    ``R`` is a Relator (stage taken from it) or a bare word with ``N`` given.
    """
    word = getattr(R, "word", R)
    stage = getattr(R, "stage", None)
    table = classical_pieces([word])
    measured = table.per_relator[0]
    pieces = sorted(format_word(w) for w in table.pieces[0])
    if N is None:
        return Property4Report(stage or 1, True, None, None, measured, pieces, "exempt")
    s = schedule(N + 1)
    predicted = 2 * s - 1
    form = f"b^{s - 1} a^{s}"
    verdict = "pass" if measured == predicted else "fail"
    return Property4Report(stage, False, predicted, form, measured, pieces, verdict)
