"""Cakes, step-function valuations, families, pieces and allocations.

Every quantity is a :class:`fractions.Fraction`; nothing in this module ever
rounds.  A valuation is a piecewise-constant density, so the value of an
interval is a finite sum and the inverse of the cumulative value (the mark
query) is a single division.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Iterable, Sequence

from .errors import DegenerateAgentError, DomainError, RangeError

ExactRational = Fraction


def as_rational(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floating point values are not accepted; use Fraction or int")
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True, order=True)
class Interval:
    left: Fraction
    right: Fraction

    def __post_init__(self):
        object.__setattr__(self, "left", as_rational(self.left))
        object.__setattr__(self, "right", as_rational(self.right))
        if self.left > self.right:
            raise ValueError(f"interval endpoints out of order: [{self.left}, {self.right}]")

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def empty(self) -> bool:
        return self.left == self.right

    def contains(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def overlap(self, other: "Interval") -> "Interval | None":
        """Positive-length intersection, or None."""
        lo, hi = max(self.left, other.left), min(self.right, other.right)
        return Interval(lo, hi) if lo < hi else None

    def __str__(self):
        return f"[{self.left}, {self.right}]"


def _canonical(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    spans = sorted(iv for iv in intervals if not iv.empty)
    merged: list[list[Fraction]] = []
    for iv in spans:
        if merged and iv.left <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], iv.right)
        else:
            merged.append([iv.left, iv.right])
    return tuple(Interval(a, b) for a, b in merged)


@dataclass(frozen=True)
class Piece:
    """A finite union of intervals, stored sorted and maximally merged.

    Touching or overlapping intervals are fused and empty ones dropped, so
    the number of stored intervals is the number of connected components.
    """

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = tuple(iv if isinstance(iv, Interval) else Interval(*iv) for iv in self.intervals)
        object.__setattr__(self, "intervals", _canonical(ivs))

    @classmethod
    def of(cls, *pairs) -> "Piece":
        return cls(tuple(Interval(a, b) for a, b in pairs))

    @property
    def components(self) -> int:
        return len(self.intervals)

    @property
    def length(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), Fraction(0))

    def union(self, other: "Piece") -> "Piece":
        return Piece(self.intervals + other.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __str__(self):
        return " u ".join(str(iv) for iv in self.intervals) or "{}"


@dataclass(frozen=True)
class StepMeasure:
    """Piecewise-constant density: ``densities[c]`` holds on cell ``c``.

    Cell ``c`` is ``[breakpoints[c], breakpoints[c+1]]``.  Adjacent cells of
    equal density are merged on construction, so equal measures compare equal.
    """

    breakpoints: tuple[Fraction, ...]
    densities: tuple[Fraction, ...]
    _cumulative: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(as_rational(b) for b in self.breakpoints)
        dens = tuple(as_rational(d) for d in self.densities)
        if len(bps) < 2 or len(dens) != len(bps) - 1:
            raise ValueError("need at least two breakpoints and one density per cell")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(d < 0 for d in dens):
            raise ValueError("densities must be nonnegative")
        # canonical form: no breakpoint between cells of equal density
        keep = [0] + [c for c in range(1, len(dens)) if dens[c] != dens[c - 1]]
        bps = tuple(bps[c] for c in keep) + (bps[-1],)
        dens = tuple(dens[c] for c in keep)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "densities", dens)
        cells = [d * (b - a) for d, a, b in zip(dens, bps, bps[1:])]
        object.__setattr__(self, "_cumulative", tuple(accumulate(cells, initial=Fraction(0))))

    @classmethod
    def uniform(cls, left=0, right=1, density=1) -> "StepMeasure":
        return cls((left, right), (density,))

    @classmethod
    def from_segments(cls, cake: Interval, segments: Sequence[Sequence]) -> "StepMeasure":
        """Build from ``(left, right, density)`` triples; uncovered cake has density 0."""
        segs = sorted((as_rational(a), as_rational(b), as_rational(d)) for a, b, d in segments)
        bps, dens = [cake.left], []
        for a, b, d in segs:
            if a >= b:
                raise ValueError(f"empty or reversed segment [{a}, {b}]")
            if a < bps[-1] or b > cake.right:
                raise ValueError(f"segment [{a}, {b}] overlaps another or leaves the cake")
            if a > bps[-1]:
                bps.append(a)
                dens.append(Fraction(0))
            bps.append(b)
            dens.append(d)
        if bps[-1] < cake.right:
            bps.append(cake.right)
            dens.append(Fraction(0))
        return cls(tuple(bps), tuple(dens))

    @property
    def support(self) -> Interval:
        return Interval(self.breakpoints[0], self.breakpoints[-1])

    @property
    def total(self) -> Fraction:
        return self._cumulative[-1]

    @property
    def max_density(self) -> Fraction:
        return max(self.densities)

    def segments(self):
        return list(zip(self.breakpoints, self.breakpoints[1:], self.densities))

    def cumulative(self, x) -> Fraction:
        """Value of ``[left end of support, x]``."""
        x = as_rational(x)
        lo, hi = self.breakpoints[0], self.breakpoints[-1]
        if x < lo or x > hi:
            raise DomainError(f"point {x} outside [{lo}, {hi}]")
        c = min(bisect.bisect_right(self.breakpoints, x) - 1, len(self.densities) - 1)
        return self._cumulative[c] + self.densities[c] * (x - self.breakpoints[c])

    def value(self, interval: Interval) -> Fraction:
        return self.cumulative(interval.right) - self.cumulative(interval.left)

    def inverse(self, start, target) -> Fraction:
        """Smallest ``x >= start`` with value of ``[start, x]`` equal to ``target``."""
        start, target = as_rational(start), as_rational(target)
        if target < 0:
            raise RangeError(f"negative target {target}")
        goal = self.cumulative(start) + target
        if goal > self.total:
            raise RangeError(f"target {target} exceeds the remaining value {self.total - self.cumulative(start)}")
        i = bisect.bisect_left(self._cumulative, goal)
        if self._cumulative[i] == goal:
            x = self.breakpoints[i]
        else:
            c = i - 1
            x = self.breakpoints[c] + (goal - self._cumulative[c]) / self.densities[c]
        return max(x, start)

    def scaled(self, factor) -> "StepMeasure":
        factor = as_rational(factor)
        return StepMeasure(self.breakpoints, tuple(d * factor for d in self.densities))

    def normalized(self) -> "StepMeasure":
        if self.total == 0:
            raise DegenerateAgentError("cannot normalize a measure with zero total value")
        return self.scaled(1 / self.total)

    def refine(self, breakpoints: Iterable[Fraction]) -> tuple[Fraction, ...]:
        """Densities on the cells of a finer breakpoint list."""
        bps = list(breakpoints)
        out = []
        for a, b in zip(bps, bps[1:]):
            c = bisect.bisect_right(self.breakpoints, a) - 1
            out.append(self.densities[min(c, len(self.densities) - 1)])
        return tuple(out)


def common_breakpoints(measures: Iterable[StepMeasure]) -> tuple[Fraction, ...]:
    pts: set[Fraction] = set()
    for m in measures:
        pts.update(m.breakpoints)
    return tuple(sorted(pts))


def average_measure(measures: Sequence[StepMeasure], weights: Sequence[Fraction] | None = None) -> StepMeasure:
    """Pointwise weighted average of densities (plain mean by default)."""
    if not measures:
        raise ValueError("cannot average zero measures")
    if weights is None:
        weights = [Fraction(1, len(measures))] * len(measures)
    bps = common_breakpoints(measures)
    refined = [m.refine(bps) for m in measures]
    dens = tuple(sum((w * r[c] for w, r in zip(weights, refined)), Fraction(0)) for c in range(len(bps) - 1))
    return StepMeasure(bps, dens)


@dataclass(frozen=True)
class Agent:
    id: str
    measure: StepMeasure

    @property
    def total(self) -> Fraction:
        return self.measure.total


@dataclass(frozen=True)
class Family:
    id: str
    member_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if not self.member_ids:
            raise ValueError(f"family {self.id!r} has no members")

    @property
    def size(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class Instance:
    cake: Interval
    agents: tuple[Agent, ...]
    families: tuple[Family, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "families", tuple(self.families))
        if not self.families:
            raise ValueError("an instance needs at least one family")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        members = [m for f in self.families for m in f.member_ids]
        if sorted(members) != sorted(ids):
            raise ValueError("family member lists must partition the agent set")
        if len({f.id for f in self.families}) != len(self.families):
            raise ValueError("family ids must be unique")
        for a in self.agents:
            if a.measure.support != self.cake:
                raise ValueError(f"agent {a.id!r} measure spans {a.measure.support}, cake is {self.cake}")

    @classmethod
    def build(cls, cake, groups: Sequence[Sequence[Agent]], family_ids: Sequence[str] | None = None) -> "Instance":
        """Instance from a list of agent groups, one group per family."""
        cake = cake if isinstance(cake, Interval) else Interval(*cake)
        family_ids = family_ids or [f"F{j + 1}" for j in range(len(groups))]
        agents = [a for g in groups for a in g]
        families = [Family(fid, tuple(a.id for a in g)) for fid, g in zip(family_ids, groups)]
        return cls(cake, tuple(agents), tuple(families))

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def k(self) -> int:
        return len(self.families)

    def agent(self, agent_id: str) -> Agent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def members(self, family_index: int) -> list[Agent]:
        return [self.agent(i) for i in self.families[family_index].member_ids]

    def family_index_of(self, agent_id: str) -> int:
        for j, f in enumerate(self.families):
            if agent_id in f.member_ids:
                return j
        raise KeyError(agent_id)


@dataclass(frozen=True)
class Allocation:
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    def __len__(self):
        return len(self.pieces)

    def __getitem__(self, j) -> Piece:
        return self.pieces[j]

    @classmethod
    def from_cuts(cls, cake: Interval, cuts: Sequence, labels: Sequence[int], k: int) -> "Allocation":
        """Consecutive runs between ``cake.left, *cuts, cake.right``; run ``r`` goes to ``labels[r]``."""
        pts = [cake.left, *map(as_rational, cuts), cake.right]
        if len(labels) != len(pts) - 1:
            raise ValueError("need one label per run")
        groups: list[list[Interval]] = [[] for _ in range(k)]
        for (a, b), lab in zip(zip(pts, pts[1:]), labels):
            groups[lab].append(Interval(a, b))
        return cls(tuple(Piece(tuple(g)) for g in groups))


def evaluate(agent: Agent | StepMeasure, piece: Piece | Interval) -> Fraction:
    """Eval query: the agent's exact value of a piece."""
    measure = agent.measure if isinstance(agent, Agent) else agent
    intervals = (piece,) if isinstance(piece, Interval) else piece.intervals
    support = measure.support
    total = Fraction(0)
    for iv in intervals:
        if not support.contains(iv):
            raise DomainError(f"interval {iv} is not inside the cake {support}")
        total += measure.value(iv)
    return total


def mark(agent: Agent | StepMeasure, start, target) -> Fraction:
    """Mark query: smallest ``x >= start`` whose interval ``[start, x]`` is worth ``target``."""
    measure = agent.measure if isinstance(agent, Agent) else agent
    return measure.inverse(start, target)


def family_average_measure(instance: Instance, family_index: int, normalize: bool = False) -> StepMeasure:
    if not 0 <= family_index < instance.k:
        raise IndexError(f"family index {family_index} out of range")
    measures = [a.measure for a in instance.members(family_index)]
    if normalize:
        for a in instance.members(family_index):
            if a.total == 0:
                raise DegenerateAgentError(f"agent {a.id!r} has zero total value")
        measures = [m.normalized() for m in measures]
    return average_measure(measures)


def component_count(allocation: Allocation) -> int:
    return sum(p.components for p in allocation.pieces)


@dataclass(frozen=True)
class PartitionReport:
    overlaps: tuple[tuple[int, int, Interval], ...]
    gaps: tuple[Interval, ...]
    outside: tuple[tuple[int, Interval], ...]
    wrong_piece_count: bool = False

    @property
    def valid(self) -> bool:
        return not (self.overlaps or self.gaps or self.outside or self.wrong_piece_count)

    def __bool__(self):
        return self.valid


def validate_partition(instance: Instance, allocation: Allocation) -> PartitionReport:
    cake = instance.cake
    outside = []
    for j, piece in enumerate(allocation.pieces):
        for iv in piece:
            if not cake.contains(iv):
                outside.append((j, iv))
    overlaps = []
    for j1 in range(len(allocation)):
        for j2 in range(j1 + 1, len(allocation)):
            for a in allocation[j1]:
                for b in allocation[j2]:
                    ov = a.overlap(b)
                    if ov is not None:
                        overlaps.append((j1, j2, ov))
    covered = Piece(tuple(iv for p in allocation.pieces for iv in p))
    gaps, cursor = [], cake.left
    for iv in covered:
        if iv.left > cursor and cursor < cake.right:
            gaps.append(Interval(cursor, min(iv.left, cake.right)))
        cursor = max(cursor, iv.right)
    if cursor < cake.right:
        gaps.append(Interval(cursor, cake.right))
    return PartitionReport(tuple(overlaps), tuple(gaps), tuple(outside), len(allocation) != instance.k)
