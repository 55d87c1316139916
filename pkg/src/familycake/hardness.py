"""Lower-bound instances for positivity and their exhaustive certification.

In ``LB(k, m)`` the cake is ``[0, mk]``.  Member ``i`` of family ``j``
values only the unit cell ``(ik + j, ik + j + 1)``.  The question is how
many components an allocation needs before every family has at least ``q``
positive members.

Finitization.  Positivity only asks whether a family's piece meets a cell
in positive length.  Inside a cell its owner's family must be present, and
the two ends decide how the cell joins its neighbours.  So every
allocation can be replaced by one that labels the two halves of every cell,
without adding components and without losing positive members.  The
search therefore works on half-cell labellings, which puts cut points at
cell boundaries and cell midpoints only.

Two exact searches are provided:

* :func:`pattern_feasible` decides one :class:`RunPattern`, a sequence of
  run owners, by a left-to-right sweep over half cells.
* :func:`min_components_for_positivity` returns the minimum run count.  By
  default it uses a dynamic program over (last owner, capped positive
  counts), which covers every pattern at once.  ``method="patterns"``
  instead enumerates patterns by increasing length, then lexicographically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Agent, Allocation, Instance, Interval, Piece, StepMeasure
from .errors import BoundViolation, ParameterError, ScaleGuardError
from .fairness import positive_agent_tally

DEFAULT_EXHAUSTIVE_LIMIT = 8
PATTERN_LIMIT = 100_000

FINITIZATION_NOTE = ("cut points restricted to cell boundaries and cell midpoints; positivity depends only on "
                     "positive-length overlap with open desired cells, so this loses no allocation's "
                     "positivity profile and never increases the component count")


@dataclass(frozen=True)
class LowerBoundInstance:
    k: int
    m: int
    instance: Instance

    @property
    def n(self) -> int:
        return self.k * self.m

    def owner(self, cell: int) -> int:
        """Family whose member desires unit cell ``cell``."""
        return cell % self.k

    def desired_cell(self, family: int, member: int) -> Interval:
        c = member * self.k + family
        return Interval(c, c + 1)


@dataclass(frozen=True)
class RunPattern:
    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError("a run pattern has at least one run")
        if any(a == b for a, b in zip(self.labels, self.labels[1:])):
            raise ValueError("adjacent runs must belong to different families")

    def __len__(self):
        return len(self.labels)


_NAMES = {(2, 3): [["Alice", "Bob", "Charlie"], ["David", "Eva", "Frankie"]]}


def build_lower_bound_instance(k: int, m: int) -> LowerBoundInstance:
    if k < 2 or m < 1:
        raise ParameterError("lower-bound instances need k >= 2 and m >= 1")
    L = m * k
    names = _NAMES.get((k, m))
    groups = []
    for j in range(k):
        group = []
        for i in range(m):
            c = i * k + j
            measure = StepMeasure.from_segments(Interval(0, L), [(c, c + 1, 1)])
            aid = names[j][i] if names else f"f{j}m{i}"
            group.append(Agent(aid, measure))
        groups.append(group)
    return LowerBoundInstance(k, m, Instance.build(Interval(0, L), groups))


def _check_scale(lb: LowerBoundInstance, limit: int):
    if lb.n > limit:
        raise ScaleGuardError(f"k*m = {lb.n} exceeds the exhaustive limit {limit}")


def labels_to_allocation(lb: LowerBoundInstance, halves) -> Allocation:
    """Allocation giving half cell ``h`` (``[h/2, (h+1)/2]``) to family ``halves[h]``."""
    groups: list[list[Interval]] = [[] for _ in range(lb.k)]
    for h, j in enumerate(halves):
        groups[j].append(Interval(Fraction(h, 2), Fraction(h + 1, 2)))
    return Allocation(tuple(Piece(tuple(g)) for g in groups))


def _runs(halves) -> int:
    return sum(1 for t, j in enumerate(halves) if t == 0 or halves[t - 1] != j)


def pattern_feasible(lb: LowerBoundInstance, pattern: RunPattern, q: int):
    """Half-cell labelling whose runs follow ``pattern`` exactly and give ``q`` positives per family, or None.

    Sweep the cells left to right; each half either continues the current
    run or opens the next one, and the last run must be reached.
    """
    k, n, C = lb.k, lb.n, len(pattern)
    if C > 2 * n:
        return None
    labels = pattern.labels
    frontier = {(-1, tuple([0] * k)): None}
    layers = []
    for cell in range(n):
        own = lb.owner(cell)
        nxt = {}
        for r, counts in frontier:
            for ra in ((0,) if r < 0 else (r, r + 1)):
                for rb in (ra, ra + 1):
                    if rb >= C:
                        continue
                    new = counts
                    if own in (labels[ra], labels[rb]):
                        new = list(counts)
                        new[own] = min(q, new[own] + 1)
                        new = tuple(new)
                    nxt.setdefault((rb, new), ((r, counts), ra, rb))
        layers.append(nxt)
        frontier = nxt
    goal = next((key for key in sorted(frontier) if key[0] == C - 1 and all(c >= q for c in key[1])), None)
    if goal is None:
        return None
    halves, key = [], goal
    for cell in range(n - 1, -1, -1):
        prev, ra, rb = layers[cell][key]
        halves += [labels[rb], labels[ra]]
        key = prev
    halves.reverse()
    return tuple(halves)


def _dp_min(lb: LowerBoundInstance, q: int):
    """Minimum run count and a witness labelling, by DP over (last label, capped counts)."""
    k, n = lb.k, lb.n
    best = {(None, tuple([0] * k)): (0, None)}
    history = []
    for cell in range(n):
        own = lb.owner(cell)
        nxt = {}
        for (last, counts), (cost, _) in best.items():
            for a in range(k):
                for b in range(k):
                    add = (last != a) + (a != b)
                    new = counts
                    if own in (a, b):
                        new = list(counts)
                        new[own] = min(q, new[own] + 1)
                        new = tuple(new)
                    key = (b, new)
                    cand = cost + add
                    if key not in nxt or cand < nxt[key][0]:
                        nxt[key] = (cand, ((last, counts), a, b))
        history.append(nxt)
        best = nxt
    goals = [(cost, key) for key, (cost, _) in best.items() if all(c >= q for c in key[1])]
    cost, key = min(goals, key=lambda g: (g[0], g[1][0], g[1][1]))
    halves = []
    for cell in range(n - 1, -1, -1):
        _, (prev, a, b) = history[cell][key]
        halves += [b, a]
        key = prev
    halves.reverse()
    return cost, tuple(halves)


def pattern_count(k: int, C: int) -> int:
    """Run patterns of length ``C`` over ``k`` families."""
    return k * (k - 1) ** (C - 1)


def _pattern_min(lb: LowerBoundInstance, q: int, limit: int = PATTERN_LIMIT):
    tried = 0
    for C in range(1, 2 * lb.n + 1):
        tried += pattern_count(lb.k, C)
        if tried > limit:
            raise ScaleGuardError(f"pattern enumeration past length {C - 1} exceeds {limit} patterns; "
                                  f"use method='dp'")
        for first in range(lb.k):
            for rest in itertools.product(range(lb.k - 1), repeat=C - 1):
                labels, prev = [first], first
                for r in rest:
                    prev = r if r < prev else r + 1
                    labels.append(prev)
                halves = pattern_feasible(lb, RunPattern(labels), q)
                if halves is not None:
                    return C, halves
    raise AssertionError("unreachable: labelling every desired cell by its owner is always feasible")


@dataclass(frozen=True)
class PositivitySearch:
    value: int
    witness: Allocation
    halves: tuple[int, ...]
    method: str


def min_components_for_positivity(lb: LowerBoundInstance, q: int, exhaustive_limit: int = DEFAULT_EXHAUSTIVE_LIMIT,
                                  method: str = "dp") -> PositivitySearch:
    if not 0 <= q <= lb.m:
        raise ParameterError(f"q must lie in [0, {lb.m}]")
    _check_scale(lb, exhaustive_limit)
    if method == "dp":
        value, halves = _dp_min(lb, q)
    elif method == "patterns":
        value, halves = _pattern_min(lb, q)
    else:
        raise ParameterError(f"unknown search method {method!r}")
    alloc = labels_to_allocation(lb, halves)
    tally = positive_agent_tally(lb.instance, alloc)
    if min(tally.values()) < q or _runs(halves) != value:
        raise AssertionError(f"witness does not certify the search value: tally {tally}, runs {_runs(halves)}")
    return PositivitySearch(value, alloc, halves, method)


def positivity_formula(k: int, m: int, q: int) -> Fraction:
    return Fraction(k * (k * q - m), k - 1)


def majority_formula(k: int, m: int) -> Fraction:
    """``n (k/2 - 1) / (k - 1)``: the specialization at q = m/2."""
    return Fraction(k * m) * (Fraction(k, 2) - 1) / (k - 1)


@dataclass(frozen=True)
class LowerBoundCertificate:
    k: int
    m: int
    q: int
    n: int
    formula: Fraction
    formula_ceiling: int
    search_value: int
    witness: Allocation
    holds: bool
    majority_formula: Fraction | None = None
    unanimous_bound: int | None = None
    finitization: str = FINITIZATION_NOTE
    infeasible_lengths: tuple[int, ...] = field(default_factory=tuple)


def verify_positivity_bound(k: int, m: int, q: int, exhaustive_limit: int = DEFAULT_EXHAUSTIVE_LIMIT,
                            method: str = "dp") -> LowerBoundCertificate:
    """Search the minimum and compare it with ``ceil(k(kq-m)/(k-1))``; raises BoundViolation if below."""
    lb = build_lower_bound_instance(k, m)
    search = min_components_for_positivity(lb, q, exhaustive_limit, method)
    formula = positivity_formula(k, m, q)
    ceiling = math.ceil(formula)
    holds = search.value >= ceiling
    majority = majority_formula(k, m) if q == math.ceil(m / 2) else None
    unanimous = lb.n if q == m else None
    if majority is not None and search.value < majority:
        holds = False
    if unanimous is not None and search.value < unanimous:
        holds = False
    cert = LowerBoundCertificate(k, m, q, lb.n, formula, ceiling, search.value, search.witness, holds,
                                 majority, unanimous, infeasible_lengths=tuple(range(1, search.value)))
    if not holds:
        raise BoundViolation(f"LB({k},{m}) with q={q}: search found {search.value} components, "
                             f"below the bound {ceiling}")
    return cert
