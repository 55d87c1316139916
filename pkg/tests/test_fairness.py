import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from familycake.core import Agent, Allocation, Instance, Piece, StepMeasure
from familycake.errors import InvalidPartition
from familycake.fairness import (Criterion, check, check_average_ef, check_democratic_ef,
                                 check_individually_proportional, check_proportional, check_unanimous_ef,
                                 family_envy, majority_threshold, positive_agent_tally)
from familycake.random_instances import random_allocation, random_instance

from .conftest import split


# -- worked example -------------------------------------------------------------

def test_average_ef_examples(ex1):
    ok = check_average_ef(ex1, split(3))
    assert ok.satisfied
    assert ok.family_values["F2"] == {"F1": 4, "F2": 5}
    bad = check_average_ef(ex1, split(1))
    assert not bad.satisfied
    assert bad.family_values["F1"] == {"F1": 4, "F2": 5}


def test_average_ef_single_family():
    inst = Instance.build((0, 1), [[Agent("a", StepMeasure.uniform()), Agent("b", StepMeasure.uniform(density=2))]])
    assert check_average_ef(inst, Allocation((Piece.of((0, 1)),))).satisfied


def test_unanimous_ef_examples(ex1):
    assert check_unanimous_ef(ex1, split(2)).satisfied
    bad = check_unanimous_ef(ex1, split(1))
    assert not bad.satisfied
    charlie = bad.per_agent["Charlie"]
    assert (charlie.own, charlie.rival, charlie.rival_value) == (1, "F2", 8)
    assert "Charlie" in bad.violators()


def test_unanimous_identical_uniform_halves():
    u = StepMeasure.uniform()
    inst = Instance.build((0, 1), [[Agent("a", u), Agent("b", u)], [Agent("c", u)]])
    assert check_unanimous_ef(inst, split(F(1, 2), (0, 1))).satisfied


def test_democratic_ef_examples(ex1):
    rep = check_democratic_ef(ex1, split(1))
    assert rep.satisfied
    assert rep.per_family["F1"].satisfied == 2
    assert not rep.per_agent["Charlie"].satisfied
    bad = check_democratic_ef(ex1, split(3))
    assert not bad.satisfied
    assert bad.per_family["F2"].satisfied == 1
    assert {a for a in ("David", "Eva") if not bad.per_agent[a].satisfied} == {"David", "Eva"}
    assert check_democratic_ef(ex1, split(2)).satisfied


def test_majority_threshold():
    assert [majority_threshold(n) for n in range(1, 7)] == [1, 1, 2, 2, 3, 3]


def test_proportional_examples(ex1):
    assert check_proportional(ex1, split(2), Criterion.UNANIMOUS_PROP).satisfied
    avg = check_proportional(ex1, split(1), Criterion.AVERAGE_PROP)
    assert not avg.satisfied
    f1 = avg.family_values["F1"]
    assert f1["F1"] == 4 and sum(f1.values()) / 2 == F(9, 2)
    whole = Instance.build((0, 1), [[Agent("a", StepMeasure.uniform())]])
    for variant in (Criterion.UNANIMOUS_PROP, Criterion.DEMOCRATIC_PROP, Criterion.AVERAGE_PROP):
        assert check_proportional(whole, Allocation((Piece.of((0, 1)),)), variant).satisfied


def test_democratic_prop(ex1):
    # Alice (9 of 9) and Bob (9 of 9) pass, Charlie too; F2: David/Eva get 9 > 9/2
    assert check_proportional(ex1, split(2), Criterion.DEMOCRATIC_PROP).satisfied
    assert not check_proportional(ex1, split(F(1, 2)), Criterion.DEMOCRATIC_PROP).satisfied


def test_positive_tally(ex1):
    assert positive_agent_tally(ex1, split(2)) == {"F1": 3, "F2": 3}
    assert positive_agent_tally(ex1, Allocation((Piece.of((0, 4)), Piece()))) == {"F1": 3, "F2": 0}


def test_individually_proportional_checker(ex1):
    alloc = split(2)
    q = F(5, 4)
    refinement = {
        "Alice": Piece.of((0, 1)), "Bob": Piece.of((1, q)), "Charlie": Piece.of((q, 2)),
        "David": Piece.of((2, 3)), "Eva": Piece.of((3, 2 + q)), "Frankie": Piece.of((2 + q, 4)),
    }
    # Bob gets 4 * 1/4 = 1 and Eva 3 * 1/4, both below 9/6
    rep = check_individually_proportional(ex1, alloc, refinement)
    assert not rep.satisfied and sorted(rep.violators()) == ["Bob", "Eva"]
    assert rep.per_agent["Bob"].own == 1 and rep.per_agent["Eva"].own == F(3, 4)
    refinement["Bob"], refinement["Charlie"] = Piece.of((1, F(3, 2))), Piece.of((F(3, 2), 2))
    refinement["Eva"], refinement["Frankie"] = Piece.of((3, F(7, 2))), Piece.of((F(7, 2), 4))
    assert check_individually_proportional(ex1, alloc, refinement).satisfied
    # sub-pieces that no longer tile the family piece
    refinement["Alice"] = Piece.of((0, F(1, 4)))
    assert not check_individually_proportional(ex1, alloc, refinement).satisfied


def test_invalid_partition_raises(ex1):
    with pytest.raises(InvalidPartition, match="overlap"):
        check_unanimous_ef(ex1, Allocation((Piece.of((0, 3)), Piece.of((2, 4)))))
    with pytest.raises(InvalidPartition, match="gap"):
        check_average_ef(ex1, Allocation((Piece.of((0, 1)), Piece.of((2, 4)))))
    with pytest.raises(InvalidPartition, match="pieces"):
        check_democratic_ef(ex1, Allocation((Piece.of((0, 4)),)))


def test_tolerance_and_envy(ex1):
    rep = check_average_ef(ex1, split(1))
    assert family_envy(rep) == {"F1": 1, "F2": 0}
    assert check_average_ef(ex1, split(1), tolerance=1).satisfied
    assert not check_average_ef(ex1, split(1), tolerance=F(99, 100)).satisfied


# -- properties -------------------------------------------------------------------

def _pair(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, k=rng.randint(1, 3))
    return inst, random_allocation(rng, inst.cake, inst.k)


@settings(max_examples=300)
@given(st.integers(0, 10**6))
def test_implication_lattice(seed):
    inst, alloc = _pair(seed)
    if check_unanimous_ef(inst, alloc).satisfied:
        assert check_average_ef(inst, alloc).satisfied
        assert check_average_ef(inst, alloc, normalize=True).satisfied
        assert check_democratic_ef(inst, alloc).satisfied


@settings(max_examples=200)
@given(st.integers(0, 10**6))
def test_two_piece_complement_identity(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, k=2)
    alloc = random_allocation(rng, inst.cake, 2)
    rep = check_unanimous_ef(inst, alloc)
    for j, fam in enumerate(inst.families):
        for aid in fam.member_ids:
            m = inst.agent(aid).measure.normalized()
            own = sum((m.value(iv) for iv in alloc[j]), F(0))
            assert rep.per_agent[aid].satisfied == (own >= F(1, 2))


@settings(max_examples=200)
@given(st.integers(0, 10**6))
def test_envy_free_agents_are_proportional(seed):
    inst, alloc = _pair(seed)
    ef = check_unanimous_ef(inst, alloc)
    prop = check_proportional(inst, alloc, Criterion.UNANIMOUS_PROP)
    for aid, v in ef.per_agent.items():
        if v.satisfied:
            assert prop.per_agent[aid].satisfied
        if inst.k == 2 and prop.per_agent[aid].satisfied:
            assert v.satisfied


@settings(max_examples=150)
@given(st.integers(0, 10**6))
def test_reindexing_invariance(seed):
    inst, alloc = _pair(seed)
    rng = random.Random(seed + 1)
    order = list(range(inst.k))
    rng.shuffle(order)
    fams = [inst.families[j] for j in order]
    fams = [type(f)(f.id, tuple(rng.sample(f.member_ids, len(f.member_ids)))) for f in fams]
    agents = list(inst.agents)
    rng.shuffle(agents)
    shuffled = Instance(inst.cake, tuple(agents), tuple(fams))
    alloc2 = Allocation(tuple(alloc[j] for j in order))
    for crit in (Criterion.AVERAGE_EF, Criterion.UNANIMOUS_EF, Criterion.DEMOCRATIC_EF, Criterion.AVERAGE_PROP,
                 Criterion.UNANIMOUS_PROP, Criterion.DEMOCRATIC_PROP):
        assert check(inst, alloc, crit).satisfied == check(shuffled, alloc2, crit).satisfied


@settings(max_examples=100)
@given(st.integers(0, 10**6))
def test_satisfied_bit_matches_verdicts(seed):
    inst, alloc = _pair(seed)
    un, dem = check_unanimous_ef(inst, alloc), check_democratic_ef(inst, alloc)
    assert un.satisfied == all(v.satisfied for v in un.per_agent.values())
    assert dem.satisfied == all(t.satisfied >= majority_threshold(t.members) for t in dem.per_family.values())
