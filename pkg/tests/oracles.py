"""Slow, independent reference implementations used only by tests."""

from floydlab.words import reduce


def naive_reduce(seq):
    out = []
    for c in seq:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def all_reduced(max_len, letters=(1, 2, -1, -2)):
    """Every reduced letter tuple of length <= max_len."""
    out = [()]
    frontier = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for c in letters:
                if not w or w[-1] != -c:
                    nxt.append(w + (c,))
        out.extend(nxt)
        frontier = nxt
    return out


def subgroup_elements(gens, keep_len, cap, limit=400_000):
    """Elements of <gens> of length <= keep_len, found by products whose
    intermediate results never exceed ``cap`` letters."""
    steps = []
    for g in gens:
        t = tuple(g.letters())
        if t:
            steps.append(t)
            steps.append(tuple(-c for c in reversed(t)))
    seen = {()}
    frontier = [()]
    while frontier and len(seen) < limit:
        nxt = []
        for w in frontier:
            for s in steps:
                r = naive_reduce(w + s)
                if len(r) <= cap and r not in seen:
                    seen.add(r)
                    nxt.append(r)
        frontier = nxt
    return {w for w in seen if len(w) <= keep_len}


def as_word(t):
    return reduce(list(t))


def max_run(elements, letter):
    best = 0
    for w in elements:
        run = 0
        for c in w:
            run = run + 1 if abs(c) == letter else 0
            best = max(best, run)
    return best


# G(1) = F(a,b) *_{<ab> = <xy>} F(x,y) is free on a, b, y via x -> a b y^-1.
_TIETZE = {1: (1,), 2: (2,), 4: (4,), 3: (1, 2, -4)}


def g1_image(letters):
    """Image in F(a, b, y) of an 8-letter word, as a reduced letter tuple."""
    out = []
    for c in letters:
        img = _TIETZE[abs(c)]
        if c < 0:
            img = tuple(-x for x in reversed(img))
        out.extend(img)
    return naive_reduce(out)


def g1_ball(radius):
    """BFS in G(1) with the free-group word problem: {image: (distance, spelling)}."""
    letters = (1, 2, 3, 4, -1, -2, -3, -4)
    seen = {(): (0, ())}
    frontier = [((), ())]
    for d in range(1, radius + 1):
        nxt = []
        for img, sp in frontier:
            for c in letters:
                new = naive_reduce(img + g1_image((c,)))
                if new not in seen:
                    seen[new] = (d, sp + (c,))
                    nxt.append((new, sp + (c,)))
        frontier = nxt
    return seen



def brute_pieces(relators):
    """Longest classical piece per relator, straight from the letter-level definition."""
    def inv(t):
        return tuple(-c for c in reversed(t))

    members = set()
    for r in relators:
        t = tuple(r.letters())
        for w in (t, inv(t)):
            for k in range(len(w)):
                members.add(w[k:] + w[:k])
    out = []
    for r in relators:
        t = tuple(r.letters())
        best = 0
        for k in range(len(t)):
            u = t[k:] + t[:k]
            for v in members:
                if v == u:
                    continue
                n = 0
                while n < min(len(u), len(v)) and u[n] == v[n]:
                    n += 1
                best = max(best, n)
        out.append(best)
    return out


def _inv(t):
    return tuple(-c for c in reversed(t))


def _half_key(t):
    # Nielsen well-order: (smaller, larger) of the initial halves of t and t^-1
    n = (len(t) + 1) // 2
    h = sorted((t[:n], _inv(t)[:n]))
    return h[0], h[1]


def _nielsen_ok(U):
    X = U + [_inv(u) for u in U]
    for x in X:
        if not x:
            return False
        for y in X:
            if y == _inv(x):
                continue
            if len(naive_reduce(x + y)) < max(len(x), len(y)):
                return False
            for z in X:
                if z == _inv(y):
                    continue
                if len(naive_reduce(x + y + z)) <= len(x) - len(y) + len(z):
                    return False
    return True


def nielsen_reduce(gens):
    """A Nielsen-reduced basis (N0, N1, N2 checked by brute force) of <gens>."""
    U = [naive_reduce(tuple(g.letters())) for g in gens]
    for _ in range(10_000):
        U = [u for u in U if u]
        dedup = []
        for u in U:
            if u not in dedup and _inv(u) not in dedup:
                dedup.append(u)
        U = dedup
        if _nielsen_ok(U):
            return U
        moved = False
        for i in range(len(U)):
            for j in range(len(U)):
                if i == j:
                    continue
                for e in (U[j], _inv(U[j])):
                    for cand in (naive_reduce(U[i] + e), naive_reduce(e + U[i])):
                        shorter = len(cand) < len(U[i])
                        same = len(cand) == len(U[i]) and _half_key(cand) < _half_key(U[i])
                        if shorter or same:
                            U[i] = cand
                            moved = True
                            break
                    if moved:
                        break
                if moved:
                    break
            if moved:
                break
        if not moved:
            raise AssertionError(f"Nielsen reduction stuck at {U}")
    raise AssertionError("Nielsen reduction did not terminate")


def subgroup_elements_exact(gens, keep_len):
    """All elements of <gens> of length <= keep_len.

    With a Nielsen-reduced basis every element w is a reduced product whose
    partial products have length <= |w| + max|u|, so the capped search is
    complete.
    """
    U = nielsen_reduce(gens)
    if not U:
        return {()}
    cap = keep_len + max(len(u) for u in U)
    steps = U + [_inv(u) for u in U]
    seen = {()}
    frontier = [()]
    while frontier:
        nxt = []
        for w in frontier:
            for s in steps:
                r = naive_reduce(w + s)
                if len(r) <= cap and r not in seen:
                    seen.add(r)
                    nxt.append(r)
        frontier = nxt
    return {w for w in seen if len(w) <= keep_len}
