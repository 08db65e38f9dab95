"""Inductive construction of the nested subgroups K_1 < K_2 < ... of F(a, b).

Each stage appends ``g_{n+1} = h_{n+1} c U(N(n)) d`` where ``h_{n+1}`` is the
shallowest exit from the core graph of ``K_n``, ``N(n)`` is the least value
beating both twice the longest letter run in ``K_n`` and ``|h_{n+1}|``, and
``(c, d)`` is the lex-least letter pair keeping the word cyclically reduced.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .stallings import (UNBOUNDED, SubgroupGraph, from_generators, is_malnormal,
                        longest_letter_run, prefix_depth, shallowest_exit)
from .words import (ABXY, TOWER, DegenerateInputError, GrowthSchedule, MagnitudeError, Word,
                    build_U, format_word, is_proper_power, parse_word, reduce)

DEFAULT_SEED = parse_word("a b")
F2_LETTERS = (1, 2, -1, -2)


class ConstructionError(ValueError):
    """A structural condition of the construction cannot be met."""


class ConstructionOverflow(MagnitudeError):
    """Building stage ``stage`` needs a schedule value beyond the magnitude cap."""

    def __init__(self, stage: int, cause: MagnitudeError, partial: "ConstructionState | None" = None):
        OverflowError.__init__(self, f"stage {stage} overflows: {cause}")
        self.stage = stage
        self.cause = cause
        self.partial = partial


@dataclass(frozen=True)
class StageRecord:
    g: Word
    h: Word | None = None
    N: int | None = None
    cd: tuple[int, int] | None = None
    checks: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConstructionState:
    schedule: GrowthSchedule
    records: tuple[StageRecord, ...]
    graphs: tuple[SubgroupGraph, ...]

    @classmethod
    def initial(cls, seed: Word = DEFAULT_SEED, schedule: GrowthSchedule = TOWER,
                check_malnormal: bool = True) -> "ConstructionState":
        if not seed:
            raise DegenerateInputError("empty seed")
        if any(g > 1 for g, _ in seed.syllables):
            raise ConstructionError("seed must be a word in a, b")
        if not seed.is_cyclically_reduced():
            raise ConstructionError(f"seed {seed} is not cyclically reduced")
        root, k = is_proper_power(seed)
        if k > 1:
            raise ConstructionError(f"seed {seed} is a proper power ({root})^{k}")
        graph = from_generators([seed])
        checks = {"cyclically_reduced": True, "not_proper_power": True, "rank": graph.rank == 1}
        if check_malnormal:
            checks["malnormal"] = is_malnormal(graph).verdict
        return cls(schedule, (StageRecord(seed, checks=checks),), (graph,))

    @property
    def stage(self) -> int:
        return len(self.records)

    @property
    def generators(self) -> list[Word]:
        return [r.g for r in self.records]

    @property
    def prefix_words(self) -> list[Word]:
        return [r.h for r in self.records[1:]]

    @property
    def exponents(self) -> list[int]:
        return [r.N for r in self.records[1:]]

    @property
    def graph(self) -> SubgroupGraph:
        return self.graphs[-1]

    def K(self, i: int) -> SubgroupGraph:
        """Core graph of K_i, 1-based."""
        return self.graphs[i - 1]

    def all_checks_pass(self) -> bool:
        return all(all(r.checks.values()) for r in self.records)

    def to_json(self) -> dict:
        stages = []
        for i, (r, g) in enumerate(zip(self.records, self.graphs), start=1):
            d = {"stage": i, "g": format_word(r.g), "length": r.g.length, "graph": g.to_json(),
                 "checks": r.checks}
            if r.h is not None:
                d.update(h=format_word(r.h), N=r.N,
                         c=ABXY.letter_name(r.cd[0]), d=ABXY.letter_name(r.cd[1]))
            stages.append(d)
        return {"seed": format_word(self.records[0].g), "schedule": self.schedule.to_dict(),
                "schedule_label": self.schedule.label(), "stages": stages}


def letter_runs(g: SubgroupGraph) -> tuple[float, float]:
    return longest_letter_run(g, 1), longest_letter_run(g, 2)


def compute_N(state_or_graph, h: Word | None = None) -> int:
    """Least N with N >= 2 * (longest a- or b-run in K_n) and N > |h_{n+1}|."""
    g = state_or_graph.graph if isinstance(state_or_graph, ConstructionState) else state_or_graph
    runs = letter_runs(g)
    if UNBOUNDED in runs:
        raise ConstructionError("subgroup contains a power of a generator: letter run unbounded")
    if h is None:
        h = shallowest_exit(g)
    return max(2 * int(max(runs)), h.length + 1)


def choose_cd(h: Word, U: Word) -> tuple[int, int]:
    """Lex-least letters (c, d) making ``h c U d`` reduced as written and cyclically reduced."""
    for c in F2_LETTERS:
        if h and h.last_letter() == -c:
            continue
        if U.first_letter() == -c:
            continue
        first = h.first_letter() if h else c
        for d in F2_LETTERS:
            if U.last_letter() == -d or first == -d:
                continue
            return c, d
    raise ConstructionError("no admissible letter pair")  # unreachable over four letters


def assemble(h: Word, c: int, U: Word, d: int) -> Word:
    cw, dw = reduce([c]), reduce([d])
    return h * cw * U * dw


def next_generator(state: ConstructionState, check_malnormal: bool = True
                   ) -> tuple[Word, ConstructionState]:
    """Compute g_{n+1} and the state extended by K_{n+1}."""
    n = state.stage
    K = state.graph
    h = shallowest_exit(K)
    N = compute_N(K, h)
    try:
        U = build_U(N, state.schedule)
    except MagnitudeError as exc:
        raise ConstructionOverflow(n + 1, exc, state) from exc
    c, d = choose_cd(h, U)
    g = assemble(h, c, U, d)
    new_graph = from_generators(state.generators + [g])
    runs = letter_runs(K)
    checks = {
        "reduced_as_written": g.length == h.length + U.length + 2,
        "cyclically_reduced": g.is_cyclically_reduced(),
        "not_in_previous": not K.contains(g),
        "nested": all(new_graph.contains(w) for w in state.generators),
        "rank": new_graph.rank == n + 1,
        "exit_depth_exact": prefix_depth(K, h) + 1 == h.length,
        "gromov_of_g_is_minimal": prefix_depth(K, g) == h.length - 1,
        "N_twice_runs": N >= 2 * max(runs),
        "N_exceeds_h": N > h.length,
    }
    if check_malnormal:
        checks["malnormal"] = is_malnormal(new_graph).verdict
    rec = StageRecord(g, h, N, (c, d), checks)
    return g, replace(state, records=state.records + (rec,), graphs=state.graphs + (new_graph,))


def build_stage(n: int, schedule: GrowthSchedule = TOWER, seed: Word = DEFAULT_SEED,
                check_malnormal: bool = True) -> ConstructionState:
    """State holding K_1..K_n; on overflow the exception carries the partial state."""
    if n < 1:
        raise ValueError("stage must be >= 1")
    state = ConstructionState.initial(seed, schedule, check_malnormal)
    while state.stage < n:
        _, state = next_generator(state, check_malnormal)
    return state


@dataclass
class CoverageResult:
    found: bool
    stage: int | None = None
    witness: Word | None = None
    log: list[dict] = field(default_factory=list)


def _complete_to_loop(K: SubgroupGraph, g: Word) -> Word | None:
    """Shortest reduced loop label at the basepoint having ``g`` as a prefix."""
    v, n = K.read(g)
    if n < g.length:
        return None
    if v == K.base:
        return g
    arrival = g.last_letter() if g else 0
    start = (v, arrival)
    prev = {start: None}
    queue = [start]
    for state in queue:
        u, a = state
        if u == K.base and state != start:
            tail = []
            while prev[state] is not None:
                tail.append(state[1])
                state = prev[state]
            return g * reduce(list(reversed(tail)))
        for c in K.letters():
            if a and c == -a:
                continue
            t = K.adj[u].get(c)
            if t is not None and (t, c) not in prev:
                prev[(t, c)] = state
                queue.append((t, c))
    return None


def cone_coverage(g: Word, max_stage: int, state: ConstructionState | None = None,
                  schedule: GrowthSchedule = TOWER) -> CoverageResult:
    """Least stage n <= max_stage with some h in K_n having ``g`` as a prefix."""
    if state is None or state.stage < max_stage:
        try:
            state = build_stage(max_stage, schedule, check_malnormal=False)
        except ConstructionOverflow as exc:
            state = exc.partial
    result = CoverageResult(False)
    for i in range(1, min(max_stage, state.stage) + 1):
        K = state.K(i)
        depth = prefix_depth(K, g)
        result.log.append({"stage": i, "readable_prefix": depth, "length": g.length})
        if depth == g.length:
            h = _complete_to_loop(K, g)
            if h is not None:
                result.found, result.stage, result.witness = True, i, h
                return result
    return result
