"""Robertson-Webb queries, protocol transcripts and the average-piece adversary.

A protocol is a generator.  It yields :class:`Eval` and :class:`Mark`
queries, receives each answer back from ``yield``, and finally returns its
result::

    def halve(agent, total):
        x = yield Mark(agent, 0, total / 2)
        return x

:func:`run_protocol` drives such a generator against an oracle and records a
:class:`Transcript`.  Oracles are either truthful (backed by real step
measures) or the adversary of :class:`AdversaryOracle`, which answers two
normalized agents so that no finite protocol ever learns a piece ``X`` with
``V1(X) + V2(X) = 1``.

Adversary bookkeeping.  The known points cut the cake into cells, and the
adversary has committed each agent's value of every cell.  A protocol can
only return unions of cells, so the reachable sums are the subset sums of
the per-cell sums ``V1(c) + V2(c)``.  With the default lattice rule every
cell sum is a multiple of ``2/D`` for an odd ``D``.  Every reachable sum is
then a multiple of ``2/D``, and 1 is never one of them.  When a cell is
split, the queried agent's share of it is forced by the query.  The other
agent's share is free, and it is chosen so that both new cell sums stay on
the lattice.  If the open range of allowed shares holds no lattice point,
the lattice is refined: ``D`` is multiplied by 3, which keeps it odd.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Generator, Iterable, Sequence, Union

from .core import Instance, Interval, StepMeasure, as_rational, evaluate, mark
from .errors import AdversaryBug, DomainError, ProtocolFault, RangeError, ScaleGuardError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Eval:
    agent: str
    left: Fraction
    right: Fraction

    def __post_init__(self):
        object.__setattr__(self, "left", as_rational(self.left))
        object.__setattr__(self, "right", as_rational(self.right))

    @property
    def interval(self) -> Interval:
        return Interval(self.left, self.right)


@dataclass(frozen=True)
class Mark:
    agent: str
    start: Fraction
    target: Fraction

    def __post_init__(self):
        object.__setattr__(self, "start", as_rational(self.start))
        object.__setattr__(self, "target", as_rational(self.target))


Query = Union[Eval, Mark]
Protocol = Generator[Query, Fraction, object]


@dataclass
class Step:
    query: Query
    answer: Fraction
    new_points: tuple[Fraction, ...]


@dataclass
class Transcript:
    """Ordered record of a protocol run.

    ``known_points`` starts with the two cake endpoints (step 0) and gains
    the query's points after each step: both endpoints of an eval, the start
    and the answer of a mark.
    """

    cake: Interval
    steps: list[Step] = field(default_factory=list)
    known_points: set[Fraction] = field(default_factory=set)
    result: object = None
    finished: bool = False

    def __post_init__(self):
        self.known_points |= {self.cake.left, self.cake.right}

    def __len__(self):
        return len(self.steps)

    def count(self, kind) -> int:
        """Number of steps of one query kind: ``Eval``, ``Mark`` or their names."""
        if isinstance(kind, str):
            kind = {"eval": Eval, "mark": Mark}[kind.lower()]
        return sum(isinstance(s.query, kind) for s in self.steps)

    @property
    def points_added(self) -> int:
        return sum(len(s.new_points) for s in self.steps)

    def record(self, query: Query, answer: Fraction) -> Step:
        pts = (query.left, query.right) if isinstance(query, Eval) else (query.start, answer)
        new = tuple(sorted({p for p in pts if p not in self.known_points}))
        self.known_points.update(new)
        step = Step(query, answer, new)
        self.steps.append(step)
        return step


class TruthfulOracle:
    """Answers queries from real step measures, keyed by agent id."""

    def __init__(self, measures: dict[str, StepMeasure], cake: Interval | None = None):
        if not measures and cake is None:
            raise ValueError("an oracle without agents needs an explicit cake")
        self.measures = dict(measures)
        self.cake = cake or next(iter(self.measures.values())).support

    @classmethod
    def for_instance(cls, instance: Instance) -> "TruthfulOracle":
        return cls({a.id: a.measure for a in instance.agents}, instance.cake)

    def answer(self, query: Query) -> Fraction:
        measure = self.measures.get(query.agent)
        if measure is None:
            raise ProtocolFault(f"query for unknown agent {query.agent!r}")
        try:
            if isinstance(query, Eval):
                return evaluate(measure, query.interval)
            if query.target < 0:
                raise ProtocolFault(f"negative mark target {query.target}")
            return mark(measure, query.start, query.target)
        except (DomainError, RangeError, ValueError) as exc:
            raise ProtocolFault(str(exc)) from None


def run_protocol(protocol: Protocol | Callable[[], Protocol], oracle, max_steps: int | None = None) -> Transcript:
    """Drive ``protocol`` against ``oracle`` for at most ``max_steps`` queries."""
    if max_steps is not None and max_steps < 0:
        raise ValueError("max_steps must be nonnegative")
    gen = protocol() if callable(protocol) else protocol
    transcript = Transcript(oracle.cake)
    answer = None
    try:
        query = next(gen)
        while True:
            if max_steps is not None and len(transcript) >= max_steps:
                gen.close()
                return transcript
            if not isinstance(query, (Eval, Mark)):
                raise ProtocolFault(f"protocol emitted {query!r}, not an Eval or Mark query")
            answer = oracle.answer(query)
            transcript.record(query, answer)
            query = gen.send(answer)
    except StopIteration as stop:
        transcript.result = stop.value
        transcript.finished = True
    return transcript


# ---------------------------------------------------------------------------
# adversary

ADVERSARY_AGENTS = ("V1", "V2")
_ONE = Fraction(1)


@dataclass(frozen=True)
class AdversaryState:
    """Known points and both agents' committed cell values on the unit cake.

    ``values[a][c]`` is agent ``a``'s value of the cell between
    ``points[c]`` and ``points[c + 1]``; every entry is positive.
    """

    points: tuple[Fraction, ...] = (Fraction(0), Fraction(1))
    values: tuple[tuple[Fraction, ...], tuple[Fraction, ...]] = ((Fraction(1),), (Fraction(1),))
    lattice: int = 1
    strategy: str = "lattice"

    def __post_init__(self):
        if self.strategy not in ("lattice", "gap"):
            raise ValueError(f"unknown adversary strategy {self.strategy!r}")

    @property
    def cells(self) -> int:
        return len(self.points) - 1

    def cell_sums(self) -> tuple[Fraction, ...]:
        return tuple(a + b for a, b in zip(*self.values))

    def cell_of(self, x: Fraction) -> int:
        """Index of the cell whose interior contains ``x`` (x not a known point)."""
        for c in range(self.cells):
            if self.points[c] < x < self.points[c + 1]:
                return c
        raise ValueError(f"{x} is a known point or outside the cake")

    def value(self, agent: int, left: Fraction, right: Fraction) -> Fraction:
        lo, hi = self.points.index(left), self.points.index(right)
        return sum(self.values[agent][lo:hi], Fraction(0))


def _agent_index(agent: str) -> int:
    try:
        return ADVERSARY_AGENTS.index(agent)
    except ValueError:
        raise ProtocolFault(f"the adversary serves agents {ADVERSARY_AGENTS}, not {agent!r}") from None


_BITSET_LIMIT = 1 << 26
_EXPLICIT_CELLS = 20


def _subset_sum_bits(sums: Iterable[Fraction]) -> tuple[int, int] | None:
    """Bitset of reachable subset sums scaled by the common denominator, or None if too fine."""
    sums = list(sums)
    den = math.lcm(*(s.denominator for s in sums)) if sums else 1
    if den * 2 > _BITSET_LIMIT:
        return None
    bits = 1
    for s in sums:
        bits |= bits << (s.numerator * (den // s.denominator))
    return bits, den


def _subset_sum_set(sums: Sequence[Fraction]) -> frozenset[Fraction]:
    if len(sums) > _EXPLICIT_CELLS:
        raise ScaleGuardError(f"{len(sums)} cells on a lattice too fine for the bitset; refusing 2**cells sums")
    out = {Fraction(0)}
    for s in sums:
        out |= {w + s for w in out}
    return frozenset(out)


def _lattice_share(lo: Fraction, width: Fraction, D: int) -> tuple[Fraction, int]:
    """A multiple of 2/D strictly inside (lo, lo+width), refining D by 3 as needed; nearest the middle."""
    while True:
        u = Fraction(2, D)
        first = math.floor(lo / u) + 1
        last = math.ceil((lo + width) / u) - 1
        if first <= last:
            mid = (lo + width / 2) / u
            k = min(range(first, last + 1), key=lambda t: (abs(t - mid), t)) if last - first < 64 else \
                max(first, min(last, round(mid)))
            return k * u, D
        D *= 3


def _gap_share(state: AdversaryState, cell: int, lo: Fraction, width: Fraction) -> Fraction:
    """Midpoint of the largest gap left by the forbidden new-cell sums inside (lo, lo+width)."""
    others = [s for c, s in enumerate(state.cell_sums()) if c != cell]
    if len(others) > 20:
        raise ScaleGuardError("gap strategy enumerates 2**cells sums; too many cells")
    total = state.cell_sums()[cell]
    rest = {Fraction(0)}
    for s in others:
        rest |= {w + s for w in rest}
    forbidden = {1 - w for w in rest} | {w + total - 1 for w in rest}
    marks = sorted({lo, lo + width} | {f for f in forbidden if lo < f < lo + width})
    a, b = max(zip(marks, marks[1:]), key=lambda g: (g[1] - g[0], -g[0]))
    return (a + b) / 2


def _split(state: AdversaryState, x: Fraction, forced: int, forced_left: Fraction | None = None) -> AdversaryState:
    """Add point ``x``; agent ``forced`` gets ``forced_left`` (or a proportional share) of the left part."""
    c = state.cell_of(x)
    p, r = state.points[c], state.points[c + 1]
    a_val = state.values[forced][c]
    free = 1 - forced
    b_val = state.values[free][c]
    left_forced = a_val * (x - p) / (r - p) if forced_left is None else forced_left
    D = state.lattice
    if state.strategy == "lattice":
        s1, D = _lattice_share(left_forced, b_val, D)
    else:
        s1 = _gap_share(state, c, left_forced, b_val)
    left_free = s1 - left_forced
    vals = [list(state.values[0]), list(state.values[1])]
    vals[forced][c:c + 1] = [left_forced, a_val - left_forced]
    vals[free][c:c + 1] = [left_free, b_val - left_free]
    pts = state.points[:c + 1] + (x,) + state.points[c + 1:]
    return replace(state, points=pts, values=(tuple(vals[0]), tuple(vals[1])), lattice=D)


def adversary_answer(state: AdversaryState, query: Query) -> tuple[Fraction, AdversaryState]:
    """Answer ``query`` consistently with every earlier commitment, keeping 1 unreachable."""
    agent = _agent_index(query.agent)
    if isinstance(query, Eval):
        if query.left > query.right:
            raise ProtocolFault(f"eval interval endpoints out of order: {query.left} > {query.right}")
        for x in (query.left, query.right):
            if not 0 <= x <= 1:
                raise ProtocolFault(f"point {x} outside the cake [0, 1]")
            if x not in state.points:
                state = _split(state, x, agent)
        return state.value(agent, query.left, query.right), state
    start, target = query.start, query.target
    if not 0 <= start <= 1:
        raise ProtocolFault(f"mark start {start} outside the cake [0, 1]")
    if start not in state.points:
        state = _split(state, start, agent)
    if target < 0 or target > state.value(agent, start, Fraction(1)):
        raise ProtocolFault(f"mark target {target} is not in [0, V([{start}, 1])]")
    c = state.points.index(start)
    acc = Fraction(0)
    while True:
        if acc == target:
            return state.points[c], state
        cell_val = state.values[agent][c]
        if acc + cell_val >= target:
            break
        acc += cell_val
        c += 1
    need = target - acc
    if need == cell_val:
        return state.points[c + 1], state
    p, r = state.points[c], state.points[c + 1]
    q = p + (r - p) * need / cell_val
    return q, _split(state, q, agent, need)


@dataclass(frozen=True)
class NoAveragePieceCertificate:
    """Exact enumeration of every value ``V1(X) + V2(X)`` over unions ``X`` of cells.

    Sums are stored as a bitset scaled by ``denominator`` (bit ``t`` set
    means ``t / denominator`` is reachable) or, when the common denominator
    is too large for that, as an explicit set in ``explicit``.
    """

    points: tuple[Fraction, ...]
    cell_sums: tuple[Fraction, ...]
    bits: int = 0
    denominator: int = 1
    explicit: frozenset | None = None

    @property
    def contains_one(self) -> bool:
        return _ONE in self

    def __len__(self):
        if self.explicit is not None:
            return len(self.explicit)
        return bin(self.bits).count("1")

    def __contains__(self, value) -> bool:
        value = as_rational(value)
        if self.explicit is not None:
            return value in self.explicit
        t = value * self.denominator
        return t.denominator == 1 and t >= 0 and bool(self.bits >> int(t) & 1)

    @property
    def reachable_sums(self) -> list[Fraction]:
        if self.explicit is not None:
            return sorted(self.explicit)
        out, bits, t = [], self.bits, 0
        while bits:
            if bits & 1:
                out.append(Fraction(t, self.denominator))
            bits >>= 1
            t += 1
        return out


def certify_no_average_piece(state: AdversaryState) -> NoAveragePieceCertificate:
    """Enumerate reachable sums; raises AdversaryBug if 1 is among them."""
    for a in (0, 1):
        if any(v <= 0 for v in state.values[a]) or sum(state.values[a]) != 1:
            raise AdversaryBug(f"agent {ADVERSARY_AGENTS[a]} cell values are not a positive partition of 1")
    sums = state.cell_sums()
    packed = _subset_sum_bits(sums)
    if packed is None:
        cert = NoAveragePieceCertificate(state.points, sums, explicit=_subset_sum_set(sums))
    else:
        cert = NoAveragePieceCertificate(state.points, sums, *packed)
    if cert.contains_one:
        raise AdversaryBug("a union of known cells is an average piece")
    return cert


def materialize(state: AdversaryState) -> dict[str, StepMeasure]:
    """Step measures realizing every commitment: constant density inside each cell."""
    out = {}
    for a, name in enumerate(ADVERSARY_AGENTS):
        dens = [v / (r - l) for v, l, r in zip(state.values[a], state.points, state.points[1:])]
        out[name] = StepMeasure(state.points, tuple(dens))
    return out


class AdversaryOracle:
    """Stateful wrapper so the adversary can be driven by :func:`run_protocol`."""

    cake = Interval(0, 1)

    def __init__(self, strategy: str = "lattice", check_each_step: bool = False):
        self.state = AdversaryState(strategy=strategy)
        self.history = [self.state]
        self.check_each_step = check_each_step

    def answer(self, query: Query) -> Fraction:
        ans, self.state = adversary_answer(self.state, query)
        self.history.append(self.state)
        if self.check_each_step:
            certify_no_average_piece(self.state)
        return ans


def replay_check(transcript: Transcript, measures: dict[str, StepMeasure]) -> list[int]:
    """Indices of steps whose recorded answer the given measures do not reproduce."""
    bad = []
    for idx, step in enumerate(transcript.steps):
        q = step.query
        m = measures[q.agent]
        got = evaluate(m, q.interval) if isinstance(q, Eval) else mark(m, q.start, q.target)
        if got != step.answer:
            bad.append(idx)
    return bad


# ---------------------------------------------------------------------------
# protocols used to exercise the adversary

def random_protocol(rng: random.Random, max_queries: int = 20, grid: int = 1 << 10) -> Protocol:
    """Random mix of evals and marks on two unit-total agents.

    New points are drawn from a dyadic grid; a mark is preceded by an eval
    of the remaining cake so that its target is always admissible.  Each of
    the two counts as a query.
    """
    known = [Fraction(0), Fraction(1)]
    used = 0
    while used < max_queries:
        agent = rng.choice(ADVERSARY_AGENTS)

        def point():
            if rng.random() < 0.3:
                return rng.choice(known)
            return Fraction(rng.randint(0, grid), grid)

        if rng.random() < 0.5 or used + 2 > max_queries:
            a, b = sorted((point(), point()))
            yield Eval(agent, a, b)
            known += [a, b]
            used += 1
        else:
            start = point()
            rest = yield Eval(agent, start, 1)
            x = yield Mark(agent, start, rest * Fraction(rng.randint(0, 16), 16))
            known += [start, x]
            used += 2
    return None


def scripted_protocol(queries: Iterable[Query]) -> Protocol:
    """Issue a fixed list of queries; returns the list of answers."""
    answers = []
    for q in queries:
        answers.append((yield q))
    return answers


def cut_and_choose_protocol(cutter: str = "V1", chooser: str = "V2") -> Protocol:
    """Classic two-agent cut and choose; returns the chooser's piece as an interval."""
    total = yield Eval(cutter, 0, 1)
    x = yield Mark(cutter, 0, total / 2)
    left = yield Eval(chooser, 0, x)
    right = yield Eval(chooser, x, 1)
    return Interval(0, x) if left >= right else Interval(x, 1)
