import random
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linprog

from familycake.linprog import feasible_point, lexmin


def _check_feasible(x, A_ub, b_ub, A_eq, b_eq):
    assert all(v >= 0 for v in x)
    for a, b in zip(A_ub, b_ub):
        assert sum(F(c) * v for c, v in zip(a, x)) <= b
    for a, b in zip(A_eq, b_eq):
        assert sum(F(c) * v for c, v in zip(a, x)) == b


@pytest.mark.parametrize("seed", range(40))
def test_optimum_matches_highs(seed):
    rng = random.Random(seed)
    n, m_ub, m_eq = rng.randint(2, 5), rng.randint(1, 4), rng.randint(0, 2)
    A_ub = [[rng.randint(-3, 5) for _ in range(n)] for _ in range(m_ub)]
    b_ub = [rng.randint(0, 10) for _ in range(m_ub)]
    # keep the region bounded
    A_ub.append([1] * n)
    b_ub.append(rng.randint(1, 10))
    A_eq = [[rng.randint(0, 3) for _ in range(n)] for _ in range(m_eq)]
    b_eq = [rng.randint(0, 6) for _ in range(m_eq)]
    c = [rng.randint(-4, 4) for _ in range(n)]
    ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq or None, b_eq=b_eq or None, bounds=(0, None), method="highs")
    x = lexmin([c], A_ub, b_ub, A_eq, b_eq)
    if ref.status == 2:
        assert x is None
        return
    assert ref.status == 0 and x is not None
    _check_feasible(x, A_ub, b_ub, A_eq, b_eq)
    assert float(sum(F(ci) * v for ci, v in zip(c, x))) == pytest.approx(ref.fun, abs=1e-7)


def test_infeasible():
    assert lexmin([[1, 0]], A_eq=[[1, 1]], b_eq=[-1]) is None
    assert feasible_point(A_ub=[[1, 0], [-1, 0]], b_ub=[1, -2]) is None


def test_unbounded():
    with pytest.raises(ValueError):
        lexmin([[-1, 0]], A_ub=[[0, 1]], b_ub=[1])


def test_lexicographic_tie_breaking():
    # x + y = 1: the first objective is flat, the second asks for small x
    x = lexmin([[1, 1], [1, 0]], A_eq=[[1, 1]], b_eq=[1])
    assert x == [0, 1]
    x = lexmin([[0, 0], [0, 1]], A_eq=[[1, 1]], b_eq=[1])
    assert x == [1, 0]


def test_exact_fraction_values():
    x = lexmin([[-1, -1]], A_ub=[[3, 1], [1, 3]], b_ub=[1, 1])
    assert x == [F(1, 4), F(1, 4)]
    assert all(isinstance(v, F) for v in x)


def test_negative_rhs_inequality():
    # x >= 2 written as -x <= -2
    x = lexmin([[1]], A_ub=[[-1]], b_ub=[-2])
    assert x == [2]


def test_feasible_point():
    p = feasible_point(A_eq=[[1, 2, 3]], b_eq=[6])
    assert p is not None and sum(np.array([1, 2, 3]) * p) == 6
