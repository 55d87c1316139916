"""Exact division: K pieces that every agent values identically.

Inside one cell of the agents' common refinement every density is
constant, so an agent's value of a piece depends only on how much of each
cell the piece gets.  Fix a layout (which pieces appear in each cell and in
what order) and the exactness conditions become an exact rational LP in
the segment lengths.  The layout is the combinatorial part: a
floating-point MILP (HiGHS, through scipy) proposes one whose component
count, segments minus merges across cell boundaries, is within budget.
The exact LP then either certifies it, with the lexicographically
smallest cut vector, or rejects it and the layout is excluded by a no-good
cut.  Nothing is returned before an exact re-check
with :func:`~familycake.core.evaluate`.

Agents whose density vectors are linear combinations of others' are
implied by them and are removed before the search, as are agents with zero
total value.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix

from .core import (Agent, Allocation, Interval, Piece, StepMeasure, as_rational, common_breakpoints,
                   component_count, evaluate)
from .errors import BudgetExhausted, ParameterError
from .linprog import lexmin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExactDivisionProblem:
    agents: tuple
    pieces_wanted: int
    component_budget: int | None = None
    epsilon: Fraction | None = None
    cake: Interval | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.pieces_wanted < 1:
            raise ParameterError("pieces_wanted must be at least 1")
        if self.cake is None:
            if not self.agents:
                raise ParameterError("a problem without agents needs an explicit cake")
            object.__setattr__(self, "cake", _measure(self.agents[0]).support)
        if self.component_budget is None:
            object.__setattr__(self, "component_budget", len(self.agents) * (self.pieces_wanted - 1) + 1)
        if self.component_budget < self.pieces_wanted:
            raise ParameterError("component budget must be at least the number of pieces")
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", as_rational(self.epsilon))

    @property
    def exact(self) -> bool:
        return self.epsilon is None

    @property
    def measures(self) -> list[StepMeasure]:
        return [_measure(a) for a in self.agents]


def _measure(agent) -> StepMeasure:
    return agent.measure if isinstance(agent, Agent) else agent


def verify_exact(agents: Sequence, allocation: Allocation, tolerance=Fraction(0)) -> tuple[bool, Fraction]:
    """Worst ``|V_i(X_j) - V_i(C)/K|`` over all agents and pieces, and whether it is within tolerance."""
    k = len(allocation)
    worst = Fraction(0)
    for a in agents:
        m = _measure(a)
        share = m.total / k
        for piece in allocation.pieces:
            worst = max(worst, abs(evaluate(m, piece) - share))
    return worst <= Fraction(tolerance), worst


def independent_measures(measures: Sequence[StepMeasure]) -> list[int]:
    """Indices of a maximal linearly independent subset (greedy, in order) of cell-value vectors."""
    if not measures:
        return []
    bps = common_breakpoints(measures)
    lengths = [b - a for a, b in zip(bps, bps[1:])]
    reduced: list[tuple[int, list[Fraction]]] = []
    keep = []
    for idx, m in enumerate(measures):
        v = [d * l for d, l in zip(m.refine(bps), lengths)]
        for pivot, row in reduced:
            if v[pivot]:
                f = v[pivot] / row[pivot]
                v = [a - f * b for a, b in zip(v, row)]
        pivot = next((c for c, x in enumerate(v) if x), None)
        if pivot is not None:
            reduced.append((pivot, v))
            keep.append(idx)
    return keep


def equal_length_split(cake: Interval, k: int) -> Allocation:
    step = cake.length / k
    return Allocation(tuple(Piece.of((cake.left + j * step, cake.left + (j + 1) * step)) for j in range(k)))


class _Arrangement:
    """Cells of the common refinement plus normalized cumulative values of each agent."""

    def __init__(self, cake: Interval, measures: Sequence[StepMeasure]):
        self.cake = cake
        self.measures = list(measures)
        self.bps = common_breakpoints(measures)
        self.M = len(self.bps) - 1
        self.lengths = [b - a for a, b in zip(self.bps, self.bps[1:])]
        self.dens = [m.refine(self.bps) for m in measures]
        self.cum = [[m.cumulative(b) for b in self.bps] for m in measures]
        self.totals = [m.total for m in measures]


def _solve_milp(arr: _Arrangement, C: int, K: int, nogoods, time_limit):
    """Piece labels present in each cell and the labels at each cell's ends.

    Returns ``layout``, a list with one label sequence per cell, or None when
    HiGHS proves that no division with at most ``C`` components exists.
    """
    N, M = len(arr.measures), arr.M
    span = arr.cake.length
    lam = [float(l / span) for l in arr.lengths]
    # normalized value per unit of scaled length
    sigma = [[float(arr.dens[i][h] * span / arr.totals[i]) for h in range(M)] for i in range(N)]

    nvar = 0

    def block(count):
        nonlocal nvar
        start = nvar
        nvar += count
        return start

    a0, p0, le0, re0 = (block(M * K) for _ in range(4))
    q0, e0 = block(M), block(M)
    m0 = block(max(M - 1, 0) * K)
    a = lambda h, j: a0 + h * K + j  # noqa: E731
    p = lambda h, j: p0 + h * K + j  # noqa: E731
    le = lambda h, j: le0 + h * K + j  # noqa: E731
    re = lambda h, j: re0 + h * K + j  # noqa: E731
    m = lambda h, j: m0 + h * K + j  # noqa: E731

    rows, lo, hi = [], [], []

    def add(coefs, lb, ub):
        rows.append(coefs)
        lo.append(lb)
        hi.append(ub)

    for h in range(M):
        add({a(h, j): 1.0 for j in range(K)}, lam[h], lam[h])
        add({le(h, j): 1.0 for j in range(K)}, 1.0, 1.0)
        add({re(h, j): 1.0 for j in range(K)}, 1.0, 1.0)
        add({p(h, j): 1.0 for j in range(K)} | {q0 + h: -(K - 1.0)}, -np.inf, 1.0)
        for j in range(K):
            add({a(h, j): 1.0, p(h, j): -lam[h]}, -np.inf, 0.0)
            add({le(h, j): 1.0, p(h, j): -1.0}, -np.inf, 0.0)
            add({re(h, j): 1.0, p(h, j): -1.0}, -np.inf, 0.0)
            # both ends carry label j in a multi-label cell: one extra segment
            add({e0 + h: 1.0, le(h, j): -1.0, re(h, j): -1.0, q0 + h: -1.0}, -2.0, np.inf)
            if h < M - 1:
                add({m(h, j): 1.0, re(h, j): -1.0}, -np.inf, 0.0)
                add({m(h, j): 1.0, le(h + 1, j): -1.0}, -np.inf, 0.0)
    count = {p(h, j): 1.0 for h in range(M) for j in range(K)} | {e0 + h: 1.0 for h in range(M)}
    count |= {m(h, j): -1.0 for h in range(M - 1) for j in range(K)}
    add(count, -np.inf, float(C))
    for i in range(N):
        for j in range(K):
            add({a(h, j): sigma[i][h] for h in range(M)}, 1.0 / K, 1.0 / K)
    for chosen in nogoods:
        add({v: 1.0 for v in chosen}, -np.inf, len(chosen) - 1.0)

    A = lil_matrix((len(rows), nvar))
    for ri, coefs in enumerate(rows):
        for v, coef in coefs.items():
            if coef:
                A[ri, v] = coef
    lb, ub = np.zeros(nvar), np.ones(nvar)
    for h in range(M):
        for j in range(K):
            ub[a(h, j)] = lam[h]
    lb[le(0, 0)] = 1.0
    integrality = np.zeros(nvar)
    integrality[p0:q0 + M] = 1
    res = milp(np.zeros(nvar), constraints=LinearConstraint(A.tocsr(), lo, hi), bounds=Bounds(lb, ub),
               integrality=integrality, options={"time_limit": time_limit, "disp": False})
    if res.x is None:
        return None
    x = res.x
    layout, chosen = [], []
    for h in range(M):
        present = [j for j in range(K) if x[p(h, j)] > 0.5]
        left = max(range(K), key=lambda j: x[le(h, j)])
        right = max(range(K), key=lambda j: x[re(h, j)])
        chosen += [p(h, j) for j in present] + [le(h, left), re(h, right)]
        if len(present) == 1:
            layout.append([left])
            continue
        middle = [j for j in present if j not in (left, right)]
        layout.append([left, *middle, right])
    return layout, chosen


def _exact_cuts(arr: _Arrangement, layout, K):
    """Lexicographically smallest exact cut vector for a fixed layout, or None.

    One LP variable per segment; the cut vector is the sequence of prefix
    sums, so minimizing segment lengths in order minimizes it.
    """
    segs = [(h, j) for h, labels in enumerate(layout) for j in labels]
    n = len(segs)
    A_eq, b_eq = [], []
    for h in range(arr.M):
        A_eq.append([Fraction(int(sh == h)) for sh, _ in segs])
        b_eq.append(arr.lengths[h])
    for i in range(len(arr.measures)):
        for j in range(K):
            A_eq.append([arr.dens[i][sh] if sj == j else Fraction(0) for sh, sj in segs])
            b_eq.append(arr.totals[i] / K)
    objectives = [[Fraction(int(q == r)) for q in range(n)] for r in range(n - 1)]
    lengths = lexmin(objectives or [[0] * n], A_eq=A_eq, b_eq=b_eq)
    if lengths is None:
        return None
    cuts, pos = [], arr.cake.left
    for length in lengths[:-1]:
        pos += length
        cuts.append(pos)
    return cuts, [j for _, j in segs]


def solve_exact(problem: ExactDivisionProblem, time_limit: float = 60.0, max_rejections: int = 25) -> Allocation:
    """Exact division within the component budget; raises BudgetExhausted otherwise."""
    if not problem.exact:
        raise ParameterError("solve_exact needs a problem in exact mode (epsilon=None)")
    K, cake = problem.pieces_wanted, problem.cake
    if K == 1:
        return Allocation((Piece((cake,)),))
    measures = [m for m in problem.measures if m.total > 0]
    basis = [measures[i] for i in independent_measures(measures)]
    if not basis:
        return equal_length_split(cake, K)
    arr = _Arrangement(cake, basis)
    first = min(problem.component_budget, len(basis) * (K - 1) + 1)
    for C in range(first, problem.component_budget + 1):
        nogoods = []
        while len(nogoods) <= max_rejections:
            found = _solve_milp(arr, C, K, nogoods, time_limit)
            if found is None:
                break
            layout, chosen = found
            solved = _exact_cuts(arr, layout, K)
            if solved is not None:
                allocation = Allocation.from_cuts(cake, *solved, K)
                ok, worst = verify_exact(problem.agents, allocation)
                if ok and component_count(allocation) <= C:
                    return allocation
                log.warning("exact re-check failed (deviation %s); excluding layout", worst)
            nogoods.append(chosen)
        log.debug("no exact division with %d components", C)
    raise BudgetExhausted(f"no exact division into {K} pieces with at most {problem.component_budget} components")


def _alternating_split(cake: Interval, bps: Sequence[Fraction], depth: int) -> Allocation:
    """Slivers of width ``len/2**depth`` labelled 0,1,0,1,...; reshuffled inside refinement cells.

    Inside a cell every agent's density is constant, so slivers lying wholly
    inside one cell are interchangeable; grouping them into one block per
    label keeps every value and removes most components.
    """
    count = 2 ** depth
    width = cake.length / count
    groups: list[list[Interval]] = [[], []]
    cell_of = []
    for s in range(count):
        a, b = cake.left + s * width, cake.left + (s + 1) * width
        inside = next((c for c in range(len(bps) - 1) if bps[c] <= a and b <= bps[c + 1]), None)
        cell_of.append(inside)
    s = 0
    while s < count:
        c = cell_of[s]
        e = s + 1
        if c is not None:
            while e < count and cell_of[e] == c:
                e += 1
        labels = [t % 2 for t in range(s, e)]
        n_first = labels.count(labels[0])
        order = [labels[0]] * n_first + [1 - labels[0]] * (len(labels) - n_first)
        for t, lab in zip(range(s, e), order):
            groups[lab].append(Interval(cake.left + t * width, cake.left + (t + 1) * width))
        s = e
    return Allocation((Piece(tuple(groups[0])), Piece(tuple(groups[1]))))


def consensus_depth(measures: Sequence[StepMeasure], cake: Interval, epsilon: Fraction) -> int:
    """Smallest depth whose worst-case deviation bound is at most ``epsilon``.

    At depth ``d >= 1`` only sliver pairs that straddle one of an agent's
    breakpoints can be unbalanced, each by at most ``max_density * width``, and
    a piece's deviation is half the imbalance.
    """
    if all(m.total / 2 <= epsilon for m in measures):
        return 0
    need = 1
    for m in measures:
        jumps = len(m.breakpoints) - 2
        if jumps == 0:
            continue
        numerator = jumps * m.max_density * cake.length
        d = 1
        while numerator / 2 ** (d + 1) > epsilon:
            d += 1
        need = max(need, d)
    return need


def solve_consensus_split(problem: ExactDivisionProblem) -> Allocation:
    """Two pieces each agent values within epsilon of half its total."""
    eps = problem.epsilon
    if eps is None or eps <= 0:
        raise ParameterError("consensus splitting needs a positive epsilon")
    if problem.pieces_wanted != 2:
        raise ParameterError("approximate splitting is implemented for two pieces only")
    cake = problem.cake
    measures = problem.measures
    bps = common_breakpoints(measures) if measures else (cake.left, cake.right)
    depth = consensus_depth(measures, cake, eps)
    best, best_dev = None, None
    for d in range(depth + 1):
        if d == 0:
            candidate = Allocation((Piece((cake,)), Piece()))
        else:
            candidate = _alternating_split(cake, bps, d)
        _, dev = verify_exact(measures, candidate)
        if best is None or dev < best_dev:
            best, best_dev = candidate, dev
        if best_dev <= eps:
            break
    return best


def solve(problem: ExactDivisionProblem) -> Allocation:
    return solve_exact(problem) if problem.exact else solve_consensus_split(problem)
