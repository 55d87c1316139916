"""Division procedures for families.

* :func:`average_ef_connected` gives each family one interval.  With two
  families it runs cut-and-choose on the family-average measures.  With
  more it runs a Sperner-labelling search and returns an eps-approximation.
* :func:`unanimous_ef_divide` makes an exact division for all agents but
  one, and that agent's family picks first.
* :func:`democratic_two_families` is the median-of-marks procedure for two
  families, written as a query protocol.
* :func:`democratic_general` runs the unanimous procedure on roughly half of
  each family.
* :func:`unef_to_exact_harness` turns any unanimous-EF solver back into an
  exact-division solver.

Every procedure checks its own output with :mod:`familycake.fairness` and
attaches the report as ``certificate``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import (Agent, Allocation, Family, Instance, Interval, Piece, StepMeasure, as_rational,
                   average_measure, component_count, evaluate, family_average_measure, mark)
from .errors import CakeError, HarnessFailure, ParameterError
from .exact import ExactDivisionProblem, solve_exact, verify_exact
from .fairness import (Criterion, FairnessReport, check_average_ef, check_democratic_ef, check_unanimous_ef,
                       family_envy, majority_threshold)
from .query import Mark, Protocol, TruthfulOracle, run_protocol


class SelfCheckFailed(CakeError):
    """A procedure's own output failed its fairness certificate."""


@dataclass(frozen=True)
class ProtocolResult:
    allocation: Allocation
    criterion_claimed: Criterion
    certificate: FairnessReport
    components: int
    queries_used: int | None = None
    details: dict = field(default_factory=dict)


def _finish(allocation, criterion, certificate, queries=None, **details) -> ProtocolResult:
    if not certificate.satisfied:
        raise SelfCheckFailed(f"{criterion.value} certificate failed: violators {certificate.violators()}")
    return ProtocolResult(allocation, criterion, certificate, component_count(allocation), queries, details)


def _whole_cake(instance: Instance) -> Allocation:
    return Allocation((Piece((instance.cake,)),))


def _connected(cake: Interval, cuts: Sequence[Fraction], owner_of_piece: Sequence[int], k: int) -> Allocation:
    pts = [cake.left, *cuts, cake.right]
    pieces = [Piece()] * k
    for p, fam in enumerate(owner_of_piece):
        pieces[fam] = Piece((Interval(pts[p], pts[p + 1]),))
    return Allocation(tuple(pieces))


# -- average envy-freeness ---------------------------------------------------

def average_ef_connected(instance: Instance, normalize: bool = False, epsilon=None) -> ProtocolResult:
    """Connected average-envy-free division (exact for two families, eps-approximate beyond)."""
    k = instance.k
    if k == 1:
        alloc = _whole_cake(instance)
        return _finish(alloc, Criterion.AVERAGE_EF, check_average_ef(instance, alloc, normalize))
    measures = [family_average_measure(instance, j, normalize) for j in range(k)]
    if k == 2:
        return _cut_and_choose(instance, measures, normalize)
    if epsilon is None:
        raise ParameterError("three or more families need an epsilon for the approximate search")
    epsilon = as_rational(epsilon)
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    return _sperner_search(instance, measures, normalize, epsilon)


def _cut_and_choose(instance, measures, normalize) -> ProtocolResult:
    cake = instance.cake
    w1, w2 = measures
    x = mark(w1, cake.left, w1.total / 2)
    left, right = Interval(cake.left, x), Interval(x, cake.right)
    # family 2 chooses; on a tie it takes the right piece
    owners = [0, 1] if evaluate(w2, right) >= evaluate(w2, left) else [1, 0]
    alloc = _connected(cake, [x], owners, 2)
    return _finish(alloc, Criterion.AVERAGE_EF, check_average_ef(instance, alloc, normalize), cut=x)


def sperner_grid(measures: Sequence[StepMeasure], cake: Interval, epsilon: Fraction) -> int:
    """Grid resolution ``D`` such that a fully labelled cell certifies envy at most ``epsilon``.

    Neighbouring vertices move each cut by at most ``len/D``, so a piece's
    value moves by at most ``2 * max_density * len/D``.  The envy bound is
    twice that.
    """
    dens = max((m.max_density for m in measures), default=Fraction(0))
    return max(1, math.ceil(4 * dens * cake.length / epsilon))


def _kuhn_simplices(k: int, D: int):
    """Simplices of the Kuhn triangulation of ``0 <= y_1 <= ... <= y_{k-1} <= D``.

    A simplex is a base vertex plus an order in which the coordinates step
    up by one.  Where two base coordinates are equal the higher one has to
    step first to stay inside the ordered region.
    """
    dim = k - 1
    for base in itertools.combinations_with_replacement(range(D), dim):
        for perm in itertools.permutations(range(dim)):
            pos = {c: t for t, c in enumerate(perm)}
            if any(base[r] == base[r + 1] and pos[r] < pos[r + 1] for r in range(dim - 1)):
                continue
            verts = [tuple(base)]
            cur = list(base)
            for c in perm:
                cur[c] += 1
                verts.append(tuple(cur))
            yield verts


def _sperner_search(instance, measures, normalize, epsilon) -> ProtocolResult:
    cake, k = instance.cake, instance.k
    D = sperner_grid(measures, cake, epsilon)
    step = cake.length / D

    def cuts_of(v):
        return [cake.left + y * step for y in v]

    # cumulative family values at every grid point, scaled to integers per family
    table = []
    for m in measures:
        cum = [m.cumulative(cake.left + y * step) for y in range(D + 1)]
        den = math.lcm(*(c.denominator for c in cum))
        table.append([int(c * den) for c in cum])
    labels: dict[tuple[int, ...], int] = {}

    def label(v):
        if v not in labels:
            cum = table[sum(v) % k]
            pts = (0, *v, D)
            # (value, length, lower index): an empty piece is never preferred to a nonempty one
            labels[v] = -max((cum[b] - cum[a], b - a, -p) for p, (a, b) in enumerate(zip(pts, pts[1:])))[2]
        return labels[v]

    for verts in _kuhn_simplices(k, D):
        if len({label(v) for v in verts}) == k:
            break
    else:  # pragma: no cover - Sperner's lemma guarantees a fully labelled simplex
        raise SelfCheckFailed("no fully labelled simplex found")
    owner_of_piece = [0] * k
    for v in verts:
        owner_of_piece[label(v)] = sum(v) % k
    best = None
    for v in verts:
        alloc = _connected(cake, cuts_of(v), owner_of_piece, k)
        report = check_average_ef(instance, alloc, normalize, epsilon)
        envy = max(family_envy(report).values())
        if best is None or envy < best[0]:
            best = (envy, alloc, report, v)
    envy, alloc, report, v = best
    return _finish(alloc, Criterion.AVERAGE_EF, report, grid=D, vertex=v, max_envy=envy,
                   labels_evaluated=len(labels))


# -- unanimous envy-freeness -------------------------------------------------

def unanimous_ef_divide(instance: Instance, time_limit: float = 60.0) -> ProtocolResult:
    """Exact division for everyone but the chooser; the chooser's family picks first.

    The chooser is the last member of the last family.  The other families
    take the remaining pieces in index order.  An exact piece is worth the
    same to every non-chooser, so none of them envies, and the chooser took
    its favourite.
    """
    k = instance.k
    if k == 1:
        alloc = _whole_cake(instance)
        return _finish(alloc, Criterion.UNANIMOUS_EF, check_unanimous_ef(instance, alloc))
    chooser = instance.families[-1].member_ids[-1]
    others = [a for a in instance.agents if a.id != chooser]
    budget = (k - 1) * (instance.n - 1) + 1
    exact = solve_exact(ExactDivisionProblem(tuple(others), k, budget, cake=instance.cake), time_limit)
    agent = instance.agent(chooser)
    values = [evaluate(agent, p) for p in exact.pieces]
    favourite = max(range(k), key=lambda p: (values[p], -p))
    rest = iter(p for p in range(k) if p != favourite)
    chooser_family = k - 1
    pieces = [exact[favourite] if j == chooser_family else exact[next(rest)] for j in range(k)]
    alloc = Allocation(tuple(pieces))
    return _finish(alloc, Criterion.UNANIMOUS_EF, check_unanimous_ef(instance, alloc), chooser=chooser,
                   chosen_piece=favourite, component_budget=budget)


# -- democratic envy-freeness ------------------------------------------------

def lower_median(values: Sequence[Fraction]) -> Fraction:
    s = sorted(values)
    return s[(len(s) - 1) // 2]


def democratic_two_families_protocol(cake: Interval, families: Sequence[Sequence[str]],
                                     totals: dict[str, Fraction]) -> Protocol:
    """Median-of-marks division for two families, one mark query per agent.

    As in the query model every agent's total value is assumed known (it is
    1 for normalized valuations), so each agent is asked a single mark for
    its half-value point.  Returns ``(cut, left_family, medians, marks)``
    where ``left_family`` is the index of the family that takes ``[left, cut]``.
    """
    medians = []
    marks = {}
    for members in families:
        xs = []
        for aid in members:
            x = yield Mark(aid, cake.left, totals[aid] / 2)
            marks[aid] = x
            xs.append(x)
        medians.append(lower_median(xs))
    m1, m2 = medians
    cut = (m1 + m2) / 2
    return cut, (0 if m1 <= m2 else 1), medians, marks


def democratic_two_families(instance: Instance) -> ProtocolResult:
    if instance.k != 2:
        raise ParameterError(f"democratic_two_families needs exactly two families, got {instance.k}")
    families = [f.member_ids for f in instance.families]
    totals = {a.id: a.total for a in instance.agents}
    transcript = run_protocol(democratic_two_families_protocol(instance.cake, families, totals),
                              TruthfulOracle.for_instance(instance))
    cut, left_family, medians, marks = transcript.result
    owners = [0, 1] if left_family == 0 else [1, 0]
    alloc = _connected(instance.cake, [cut], owners, 2)
    return _finish(alloc, Criterion.DEMOCRATIC_EF, check_democratic_ef(instance, alloc), len(transcript),
                   cut=cut, medians=tuple(medians), marks=marks, transcript=transcript)


def democratic_component_bound(instance: Instance) -> int:
    """Component bound for :func:`democratic_general`: ``(k-1)(s-1)+1`` with ``s`` the selected agents."""
    selected = sum(majority_threshold(f.size) for f in instance.families)
    return (instance.k - 1) * (selected - 1) + 1


def democratic_general(instance: Instance, time_limit: float = 60.0) -> ProtocolResult:
    """Unanimous-EF division for the first ceil(n_j/2) members of every family."""
    if instance.k == 1:
        alloc = _whole_cake(instance)
        return _finish(alloc, Criterion.DEMOCRATIC_EF, check_democratic_ef(instance, alloc))
    families = [Family(f.id, f.member_ids[:majority_threshold(f.size)]) for f in instance.families]
    keep = {a for f in families for a in f.member_ids}
    sub = Instance(instance.cake, tuple(a for a in instance.agents if a.id in keep), tuple(families))
    inner = unanimous_ef_divide(sub, time_limit)
    alloc = inner.allocation
    return _finish(alloc, Criterion.DEMOCRATIC_EF, check_democratic_ef(instance, alloc),
                   selected=tuple(sorted(keep)), component_bound=democratic_component_bound(instance),
                   sub_certificate=inner.certificate)


# -- unanimous EF back to exact division --------------------------------------

def unef_to_exact_harness(agents: Sequence[Agent | StepMeasure], K: int,
                          unanimous_solver: Callable[[Instance], ProtocolResult | Allocation] = unanimous_ef_divide
                          ) -> Allocation:
    """Exact division for ``agents`` obtained from a unanimous-EF solver.

    The synthetic instance has ``K-1`` families that each hold a copy of
    every (normalized) agent, plus one family whose single member values
    the cake by the agents' average.  Any unanimous-EF division of it is an
    exact division for the original agents.
    """
    if K < 2:
        raise ParameterError("the harness needs K >= 2")
    if not agents:
        raise ParameterError("the harness needs at least one agent")
    measures = [(a.measure if isinstance(a, Agent) else a).normalized() for a in agents]
    cake = measures[0].support
    groups = [[Agent(f"c{j + 1}_{i + 1}", m) for i, m in enumerate(measures)] for j in range(K - 1)]
    groups.append([Agent("mean", average_measure(measures))])
    synthetic = Instance.build(cake, groups)
    out = unanimous_solver(synthetic)
    alloc = out.allocation if isinstance(out, ProtocolResult) else out
    report = check_unanimous_ef(synthetic, alloc)
    if not report.satisfied:
        raise HarnessFailure(f"solver output is not unanimous-EF on the synthetic instance: {report.violators()}")
    ok, worst = verify_exact(measures, alloc)
    if not ok:
        raise HarnessFailure(f"unanimous-EF output is not exact for the original agents (deviation {worst})")
    return alloc
