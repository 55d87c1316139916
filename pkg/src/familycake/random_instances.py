"""Seeded generators of random measures, instances and allocations.

Used by the property tests, the acceptance suite and the CLI's sweeps.  All
randomness comes from an explicit :class:`random.Random`, so every draw is
reproducible from its seed.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .core import Agent, Allocation, Instance, Interval, Piece, StepMeasure


def random_measure(rng: random.Random, cake: Interval = Interval(0, 1), max_cells: int = 4, grid: int = 12,
                   max_density: int = 9, allow_zero_total: bool = False) -> StepMeasure:
    """Step measure with at most ``max_cells`` cells whose breakpoints lie on a ``grid``-point lattice."""
    cells = rng.randint(1, min(max_cells, grid))
    inner = sorted(rng.sample(range(1, grid), cells - 1))
    bps = [cake.left + cake.length * Fraction(p, grid) for p in [0, *inner, grid]]
    dens = [rng.randint(0, max_density) for _ in range(cells)]
    if not allow_zero_total and not any(dens):
        dens[rng.randrange(cells)] = rng.randint(1, max_density) if max_density else 1
    return StepMeasure(tuple(bps), tuple(dens))


def random_instance(rng: random.Random, k: int | None = None, n: int | None = None, max_family: int = 3,
                    cake: Interval = Interval(0, 1), **measure_kw) -> Instance:
    """Random instance; ``n`` fixes the total agent count, otherwise family sizes are drawn up to ``max_family``."""
    if k is None:
        k = rng.randint(1, 3)
    if n is None:
        sizes = [rng.randint(1, max_family) for _ in range(k)]
    else:
        if n < k:
            raise ValueError("need at least one agent per family")
        sizes = [1] * k
        for _ in range(n - k):
            sizes[rng.randrange(k)] += 1
    groups, count = [], 0
    for size in sizes:
        group = []
        for _ in range(size):
            count += 1
            group.append(Agent(f"a{count}", random_measure(rng, cake, **measure_kw)))
        groups.append(group)
    return Instance.build(cake, groups)


def random_allocation(rng: random.Random, cake: Interval, k: int, max_cuts: int = 5, grid: int = 24) -> Allocation:
    """Random partition into ``k`` pieces by cuts on a lattice, each run labelled at random."""
    cuts = sorted(rng.sample(range(1, grid), rng.randint(0, min(max_cuts, grid - 1))))
    pts = [cake.left + cake.length * Fraction(c, grid) for c in [0, *cuts, grid]]
    groups: list[list[Interval]] = [[] for _ in range(k)]
    for a, b in zip(pts, pts[1:]):
        groups[rng.randrange(k)].append(Interval(a, b))
    return Allocation(tuple(Piece(tuple(g)) for g in groups))
