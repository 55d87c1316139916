"""Exact rational linear programming on small dense problems.

Two-phase tableau simplex over :class:`~fractions.Fraction` with Bland's
rule, so it never cycles and never rounds.  Several objectives can be given;
they are minimized lexicographically by freezing, after each stage, every
nonbasic column with a positive reduced cost (those columns have to stay at
zero on the optimal face).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Vector = Sequence[Fraction]

_ZERO = Fraction(0)


class _Tableau:
    def __init__(self, rows, rhs, basis, ncols):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.ncols = ncols
        self.allowed = [True] * ncols

    def pivot(self, r, col):
        row = self.rows[r]
        p = row[col]
        if p != 1:
            inv = 1 / p
            self.rows[r] = row = [v * inv for v in row]
            self.rhs[r] *= inv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[col]
            if f:
                self.rows[i] = [a - f * b if b else a for a, b in zip(other, row)]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = col

    def reduced_costs(self, cost):
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                d = [dj - cb * a if a else dj for dj, a in zip(d, self.rows[i])]
        return d

    def optimize(self, cost):
        """Minimize ``cost`` from the current basis; False if unbounded."""
        d = self.reduced_costs(cost)
        while True:
            col = next((j for j in range(self.ncols) if self.allowed[j] and d[j] < 0), None)
            if col is None:
                return d
            best = None
            for i, row in enumerate(self.rows):
                a = row[col]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return None
            r = best[1]
            self.pivot(r, col)
            f = d[col]
            row = self.rows[r]
            d = [dj - f * a if a else dj for dj, a in zip(d, row)]


def lexmin(objectives: Sequence[Vector], A_ub: Sequence[Vector] = (), b_ub: Vector = (),
           A_eq: Sequence[Vector] = (), b_eq: Vector = ()) -> list[Fraction] | None:
    """Lexicographically minimize ``objectives`` subject to the constraints and ``x >= 0``.

    Returns the optimal point, or None if the constraints are infeasible.
    Raises ValueError if a stage is unbounded.
    """
    objectives = [list(map(Fraction, c)) for c in objectives]
    if objectives:
        n = len(objectives[0])
    elif A_ub:
        n = len(A_ub[0])
    elif A_eq:
        n = len(A_eq[0])
    else:
        return []
    n_ub = len(A_ub)
    rows_in = [(list(map(Fraction, a)), Fraction(b), True) for a, b in zip(A_ub, b_ub)]
    rows_in += [(list(map(Fraction, a)), Fraction(b), False) for a, b in zip(A_eq, b_eq)]
    needs_art = [not (is_ub and b >= 0) for _, b, is_ub in rows_in]
    n_art = sum(needs_art)
    ncols = n + n_ub + n_art
    rows, rhs, basis = [], [], []
    art_cols = []
    k_art = 0
    for i, (a, b, is_ub) in enumerate(rows_in):
        row = a + [_ZERO] * (n_ub + n_art)
        if is_ub:
            row[n + i] = Fraction(1)
        if b < 0:
            row = [-v for v in row]
            b = -b
        if needs_art[i]:
            col = n + n_ub + k_art
            row[col] = Fraction(1)
            art_cols.append(col)
            basis.append(col)
            k_art += 1
        else:
            basis.append(n + i)
        rows.append(row)
        rhs.append(b)
    tab = _Tableau(rows, rhs, basis, ncols)

    if art_cols:
        cost = [_ZERO] * ncols
        for col in art_cols:
            cost[col] = Fraction(1)
        tab.optimize(cost)
        phase1 = sum(tab.rhs[i] for i, b in enumerate(tab.basis) if b in set(art_cols))
        if phase1 > 0:
            return None
        art = set(art_cols)
        for col in art_cols:
            tab.allowed[col] = False
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] in art:
                col = next((j for j in range(n + n_ub) if tab.rows[r][j] != 0), None)
                if col is None:
                    del tab.rows[r], tab.rhs[r], tab.basis[r]
                    continue
                tab.pivot(r, col)
            r += 1

    for c in objectives:
        cost = c + [_ZERO] * (ncols - n)
        d = tab.optimize(cost)
        if d is None:
            raise ValueError("linear program is unbounded")
        basic = set(tab.basis)
        for j in range(ncols):
            if j not in basic and d[j] > 0:
                tab.allowed[j] = False

    x = [_ZERO] * ncols
    for i, b in enumerate(tab.basis):
        x[b] = tab.rhs[i]
    return x[:n]


def feasible_point(A_ub=(), b_ub=(), A_eq=(), b_eq=(), n=None) -> list[Fraction] | None:
    if n is None:
        n = len((A_ub or A_eq)[0])
    return lexmin([[0] * n], A_ub, b_ub, A_eq, b_eq)
