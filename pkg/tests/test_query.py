import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from familycake.core import StepMeasure, evaluate, mark
from familycake.errors import AdversaryBug, ProtocolFault, ScaleGuardError
from familycake.query import (AdversaryOracle, AdversaryState, Eval, Mark, TruthfulOracle, adversary_answer,
                              certify_no_average_piece, cut_and_choose_protocol, materialize, random_protocol,
                              replay_check, run_protocol, scripted_protocol)


def subset_sums(state):
    """Every V1(X) + V2(X) over unions of cells: listed subsets when small, a set sweep otherwise."""
    sums = state.cell_sums()
    if len(sums) <= 12:
        return {sum(c, F(0)) for r in range(len(sums) + 1) for c in itertools.combinations(sums, r)}
    out = {F(0)}
    for s in sums:
        out |= {w + s for w in out}
    return out


def empty():
    return
    yield


# -- run_protocol -----------------------------------------------------------------

def test_empty_protocol():
    t = run_protocol(empty, TruthfulOracle({"a": StepMeasure.uniform()}))
    assert len(t) == 0 and t.finished
    assert t.known_points == {0, 1}


def test_one_eval():
    def one():
        yield Eval("a", 0, F(1, 2))
    t = run_protocol(one, TruthfulOracle({"a": StepMeasure.uniform(density=2)}))
    assert len(t) == 1
    assert t.steps[0].answer == 1
    assert t.steps[0].new_points == (F(1, 2),)


def test_known_points_accounting():
    oracle = TruthfulOracle({"a": StepMeasure.uniform()})
    t = run_protocol(scripted_protocol([Eval("a", F(1, 4), F(3, 4)), Mark("a", F(1, 4), F(1, 4)),
                                        Eval("a", 0, 1)]), oracle)
    assert [s.new_points for s in t.steps] == [(F(1, 4), F(3, 4)), (F(1, 2),), ()]
    assert len(t.known_points) == 2 + t.points_added == 5
    assert t.result == [F(1, 2), F(1, 2), 1]


def test_max_steps():
    t = run_protocol(scripted_protocol([Eval("a", 0, 1)] * 5), TruthfulOracle({"a": StepMeasure.uniform()}), 3)
    assert len(t) == 3 and not t.finished
    t = run_protocol(scripted_protocol([Eval("a", 0, 1)]), TruthfulOracle({"a": StepMeasure.uniform()}), 0)
    assert len(t) == 0
    with pytest.raises(ValueError):
        run_protocol(empty, TruthfulOracle({"a": StepMeasure.uniform()}), -1)


@pytest.mark.parametrize("query", [Eval("zz", 0, 1), Eval("a", 0, 2), Mark("a", 0, 5), Mark("a", 0, -1), "junk"])
def test_protocol_faults(query):
    with pytest.raises(ProtocolFault):
        run_protocol(scripted_protocol([query]), TruthfulOracle({"a": StepMeasure.uniform()}))


def test_truthful_answers_match_core(ex1):
    oracle = TruthfulOracle.for_instance(ex1)
    assert oracle.cake.right == 4
    assert oracle.answer(Mark("Alice", 0, F(9, 2))) == F(3, 4)
    assert oracle.answer(Eval("Charlie", 1, 2)) == 8


def test_count_by_kind():
    t = run_protocol(cut_and_choose_protocol,
                     TruthfulOracle({"V1": StepMeasure.uniform(), "V2": StepMeasure.uniform()}))
    assert t.count(Eval) == t.count("eval") == 3
    assert t.count("mark") == 1
    assert t.result.length == F(1, 2)


# -- adversary ------------------------------------------------------------------

def test_fresh_state():
    cert = certify_no_average_piece(AdversaryState())
    assert cert.reachable_sums == [0, 2]
    assert 1 not in cert and not cert.contains_one


def test_first_eval_splits_in_two():
    ans, state = adversary_answer(AdversaryState(), Eval("V1", 0, F(1, 2)))
    assert 0 < ans < 1
    assert state.cells == 2
    cert = certify_no_average_piece(state)
    assert set(cert.reachable_sums) == subset_sums(state)
    assert 1 not in subset_sums(state)


def test_repeated_query_same_answer():
    q = Eval("V2", F(1, 3), F(5, 7))
    a1, s1 = adversary_answer(AdversaryState(), q)
    a2, s2 = adversary_answer(s1, q)
    assert a1 == a2 and s1 == s2


def test_mark_query():
    ans, state = adversary_answer(AdversaryState(), Mark("V1", 0, F(1, 2)))
    assert state.value(0, 0, ans) == F(1, 2)
    assert 1 not in subset_sums(state)
    # V2's split of the cell was chosen by the adversary, not forced to 1/2
    assert state.value(1, 0, ans) != F(1, 2)


def test_cut_and_choose_against_adversary():
    oracle = AdversaryOracle(check_each_step=True)
    t = run_protocol(cut_and_choose_protocol, oracle)
    assert t.finished
    sums = subset_sums(oracle.state)
    assert 1 not in sums
    assert sorted(sums) == [0, F(2, 3), F(4, 3), 2]
    assert replay_check(t, materialize(oracle.state)) == []


def test_mark_at_known_point_adds_nothing():
    _, s = adversary_answer(AdversaryState(), Eval("V1", 0, F(1, 2)))
    v = s.value(0, 0, F(1, 2))
    ans, s2 = adversary_answer(s, Mark("V1", 0, v))
    assert ans == F(1, 2) and s2 == s


def test_adversary_faults():
    for q in (Eval("V3", 0, 1), Eval("V1", F(1, 2), 0), Eval("V1", 0, 2), Mark("V1", 0, 2), Mark("V1", 2, 0)):
        with pytest.raises(ProtocolFault):
            adversary_answer(AdversaryState(), q)


def test_corrupted_state_is_reported():
    bad = AdversaryState((F(0), F(1, 2), F(1)), ((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2))))
    with pytest.raises(AdversaryBug):
        certify_no_average_piece(bad)
    with pytest.raises(AdversaryBug):
        certify_no_average_piece(AdversaryState((F(0), F(1)), ((F(1),), (F(1, 2),))))
    with pytest.raises(ValueError):
        AdversaryState(strategy="nope")


@pytest.mark.parametrize("strategy", ["lattice", "gap"])
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_random_protocols_small(strategy, seed):
    rng = random.Random(seed)
    oracle = AdversaryOracle(strategy)
    t = run_protocol(random_protocol(rng, max_queries=6), oracle)
    for state in oracle.history:
        sums = subset_sums(state)
        assert 1 not in sums
        assert len(sums) <= 2 ** state.cells
        cert = certify_no_average_piece(state)
        assert len(cert) == len(sums) and all(w in cert for w in sums)
        for a in (0, 1):
            assert sum(state.values[a]) == 1 and all(v > 0 for v in state.values[a])
    assert replay_check(t, materialize(oracle.state)) == []
    assert len(t.known_points) == 2 + t.points_added
    assert t.known_points == set(oracle.state.points)


def test_materialized_measures_answer_everything():
    rng = random.Random(5)
    oracle = AdversaryOracle()
    t = run_protocol(random_protocol(rng, max_queries=20), oracle)
    ms = materialize(oracle.state)
    assert all(m.total == 1 for m in ms.values())
    for step in t.steps:
        q = step.query
        if isinstance(q, Eval):
            assert evaluate(ms[q.agent], q.interval) == step.answer
        else:
            assert mark(ms[q.agent], q.start, q.target) == step.answer


def _fine_state(cells):
    # cell sums with pairwise coprime large denominators defeat the bitset
    primes = [p for p in range(10_007, 20_000, 2) if all(p % d for d in range(3, int(p ** 0.5) + 1, 2))][:cells - 1]
    v = [F(1, 4 * p) for p in primes]
    v.append(1 - sum(v))
    pts = tuple(F(i, cells) for i in range(cells + 1))
    return AdversaryState(pts, (tuple(v), tuple(v)))


def test_explicit_fallback_and_scale_guard():
    cert = certify_no_average_piece(_fine_state(6))
    assert cert.explicit is not None and len(cert) == 2 ** 6
    assert set(cert.reachable_sums) == subset_sums(_fine_state(6))
    with pytest.raises(ScaleGuardError):
        certify_no_average_piece(_fine_state(24))
