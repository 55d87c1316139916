"""Acceptance criteria, one test each; the terminal summary prints a PASS/FAIL line per criterion."""

import math
import random
import time
from fractions import Fraction as F

import pytest

from familycake.core import component_count, evaluate
from familycake.exact import ExactDivisionProblem, solve_consensus_split, solve_exact, verify_exact
from familycake.fairness import check_average_ef, check_democratic_ef, check_unanimous_ef
from familycake.hardness import (PATTERN_LIMIT, build_lower_bound_instance, min_components_for_positivity,
                                 pattern_count, positivity_formula, verify_positivity_bound)
from familycake.protocols import democratic_two_families, unanimous_ef_divide, unef_to_exact_harness
from familycake.query import (AdversaryOracle, certify_no_average_piece, materialize, random_protocol, replay_check,
                              run_protocol)
from familycake.random_instances import random_allocation, random_instance, random_measure

from .conftest import make_ex1, split

pytestmark = pytest.mark.acceptance

SEED = 20261014


def test_criterion_1_ex1_golden_verdicts():
    start = time.perf_counter()
    ex1 = make_ex1()
    assert check_unanimous_ef(ex1, split(2)).satisfied is True

    assert check_democratic_ef(ex1, split(1)).satisfied is True
    avg = check_average_ef(ex1, split(1))
    assert avg.satisfied is False
    assert avg.family_values["F1"]["F1"] == 4 and avg.family_values["F1"]["F2"] == 5

    avg = check_average_ef(ex1, split(3))
    assert avg.satisfied is True
    assert avg.family_values["F2"]["F2"] == 5 and avg.family_values["F2"]["F1"] == 4
    assert check_democratic_ef(ex1, split(3)).satisfied is False
    assert time.perf_counter() - start < 1


def test_criterion_2_two_family_democratic_protocol():
    rng = random.Random(SEED)
    instances = [make_ex1()] + [random_instance(rng, k=2, max_family=5, max_cells=6) for _ in range(200)]
    for inst in instances:
        res = democratic_two_families(inst)
        assert res.components == component_count(res.allocation) == 2
        assert check_democratic_ef(inst, res.allocation).satisfied
        transcript = res.details["transcript"]
        assert res.queries_used == len(transcript) == inst.n
        assert transcript.count("mark") == inst.n and transcript.count("eval") == 0


def test_criterion_3_unanimous_solver():
    rng = random.Random(SEED + 3)
    start = time.perf_counter()
    for _ in range(100):
        k = rng.randint(1, 3)
        n = rng.randint(k, 5)
        inst = random_instance(rng, k=k, n=n, max_cells=6)
        res = unanimous_ef_divide(inst)
        assert check_unanimous_ef(inst, res.allocation).satisfied
        assert component_count(res.allocation) <= (k - 1) * (n - 1) + 1
    assert time.perf_counter() - start < 60


def test_criterion_4_exact_division_and_consensus():
    rng = random.Random(SEED + 4)
    for _ in range(60):
        N, K = rng.randint(1, 3), rng.randint(1, 3)
        measures = [random_measure(rng) for _ in range(N)]
        alloc = solve_exact(ExactDivisionProblem(measures, K))
        assert verify_exact(measures, alloc, F(0)) == (True, 0)
        assert component_count(alloc) <= N * (K - 1) + 1

        devs = []
        for eps in (F(1, 10), F(1, 100)):
            halves = solve_consensus_split(ExactDivisionProblem(measures, 2, epsilon=eps))
            ok, dev = verify_exact(measures, halves, eps)
            assert ok
            for m in measures:
                for piece in halves.pieces:
                    assert abs(evaluate(m, piece) - m.total / 2) <= eps
            devs.append(dev)
        assert devs[1] <= devs[0]


def test_criterion_5_harness_round_trip():
    rng = random.Random(SEED + 5)
    for _ in range(20):
        N, K = rng.randint(1, 3), rng.choice([2, 3])
        measures = [random_measure(rng, max_cells=3, grid=6) for _ in range(N)]
        alloc = unef_to_exact_harness(measures, K, unanimous_ef_divide)
        assert verify_exact(measures, alloc, F(0)) == (True, 0)


def test_criterion_6_positivity_lower_bounds():
    start = time.perf_counter()
    for k in range(2, 9):
        for m in range(1, 9):
            if k * m > 8:
                continue
            lb = build_lower_bound_instance(k, m)
            for q in sorted({math.ceil(m / 2), m}):
                cert = verify_positivity_bound(k, m, q)
                assert cert.search_value >= math.ceil(positivity_formula(k, m, q))
                if q == m and k == 2:
                    assert cert.search_value == k * m
                # independent enumeration of run patterns where it is tractable
                if sum(pattern_count(k, C) for C in range(1, cert.search_value + 1)) <= PATTERN_LIMIT:
                    assert min_components_for_positivity(lb, q, method="patterns").value == cert.search_value
    assert time.perf_counter() - start < 300


def test_criterion_7_adversary_safety():
    rng = random.Random(SEED + 7)
    for _ in range(1000):
        oracle = AdversaryOracle()
        transcript = run_protocol(random_protocol(rng, max_queries=20), oracle)
        for state in oracle.history:
            cert = certify_no_average_piece(state)
            assert 1 not in cert
        assert replay_check(transcript, materialize(oracle.state)) == []


def test_criterion_8_implication_lattice():
    rng = random.Random(SEED + 8)
    counterexamples = 0
    positives = 0
    for _ in range(1000):
        inst = random_instance(rng, k=rng.randint(1, 4), max_family=3)
        alloc = random_allocation(rng, inst.cake, inst.k, max_cuts=6)
        if check_unanimous_ef(inst, alloc).satisfied:
            positives += 1
            if not (check_average_ef(inst, alloc).satisfied and check_democratic_ef(inst, alloc).satisfied):
                counterexamples += 1
    assert counterexamples == 0
    assert positives > 0
