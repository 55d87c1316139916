"""Family-level envy-freeness and proportionality checkers.

All comparisons are exact and weak (``>=``).  Each checker returns a
:class:`FairnessReport` whose ``satisfied`` bit is derived from the per-agent
or per-family verdicts it carries, so a report can be audited by hand.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Allocation, Instance, Piece, evaluate, family_average_measure, validate_partition
from .errors import InvalidPartition


class Criterion(str, enum.Enum):
    AVERAGE_EF = "AverageEF"
    UNANIMOUS_EF = "UnanimousEF"
    DEMOCRATIC_EF = "DemocraticEF"
    AVERAGE_PROP = "AverageProp"
    UNANIMOUS_PROP = "UnanimousProp"
    DEMOCRATIC_PROP = "DemocraticProp"
    INDIVIDUAL_PROP = "IndividualProp"


@dataclass(frozen=True)
class AgentVerdict:
    """One agent's view of the allocation.

    ``own`` is the agent's value of its family's piece; ``rival`` and
    ``rival_value`` name the comparison that matters for the criterion (the
    most valuable other piece for envy, the proportional share for
    proportionality).
    """

    family: str
    satisfied: bool
    own: Fraction
    rival: str | None
    rival_value: Fraction

    @property
    def envious(self) -> bool:
        return not self.satisfied


@dataclass(frozen=True)
class FamilyTally:
    satisfied: int
    members: int


@dataclass(frozen=True)
class FairnessReport:
    criterion: Criterion
    satisfied: bool
    per_agent: dict[str, AgentVerdict] = field(default_factory=dict)
    per_family: dict[str, FamilyTally] = field(default_factory=dict)
    # family -> piece-owner family -> averaged value; filled for average criteria
    family_values: dict[str, dict[str, Fraction]] = field(default_factory=dict)
    tolerance: Fraction = Fraction(0)
    normalized: bool = False

    def __bool__(self):
        return self.satisfied

    def violators(self) -> list[str]:
        return [aid for aid, v in self.per_agent.items() if not v.satisfied]


def majority_threshold(size: int) -> int:
    """Members that must approve in a family of ``size``: at least half, rounded up."""
    return math.ceil(size / 2)


def _require_partition(instance: Instance, allocation: Allocation) -> None:
    report = validate_partition(instance, allocation)
    if not report.valid:
        problems = []
        if report.wrong_piece_count:
            problems.append(f"{len(allocation)} pieces for {instance.k} families")
        problems += [f"pieces {a} and {b} overlap on {iv}" for a, b, iv in report.overlaps]
        problems += [f"gap {iv}" for iv in report.gaps]
        problems += [f"piece {j} leaves the cake at {iv}" for j, iv in report.outside]
        raise InvalidPartition("; ".join(problems))


def _agent_envy_verdicts(instance: Instance, allocation: Allocation) -> dict[str, AgentVerdict]:
    verdicts = {}
    for j, fam in enumerate(instance.families):
        for aid in fam.member_ids:
            agent = instance.agent(aid)
            values = [evaluate(agent, p) for p in allocation.pieces]
            own = values[j]
            rival, rival_value = None, Fraction(0)
            for jj, v in enumerate(values):
                if jj != j and (rival is None or v > rival_value):
                    rival, rival_value = instance.families[jj].id, v
            verdicts[aid] = AgentVerdict(fam.id, rival is None or own >= rival_value, own, rival, rival_value)
    return verdicts


def _agent_prop_verdicts(instance: Instance, allocation: Allocation) -> dict[str, AgentVerdict]:
    verdicts = {}
    for j, fam in enumerate(instance.families):
        for aid in fam.member_ids:
            agent = instance.agent(aid)
            own = evaluate(agent, allocation[j])
            share = agent.total / instance.k
            verdicts[aid] = AgentVerdict(fam.id, own >= share, own, None, share)
    return verdicts


def _tallies(instance: Instance, verdicts: dict[str, AgentVerdict]) -> dict[str, FamilyTally]:
    return {
        f.id: FamilyTally(sum(verdicts[a].satisfied for a in f.member_ids), f.size)
        for f in instance.families
    }


def check_unanimous_ef(instance: Instance, allocation: Allocation) -> FairnessReport:
    _require_partition(instance, allocation)
    verdicts = _agent_envy_verdicts(instance, allocation)
    tallies = _tallies(instance, verdicts)
    ok = all(t.satisfied == t.members for t in tallies.values())
    return FairnessReport(Criterion.UNANIMOUS_EF, ok, verdicts, tallies)


def check_democratic_ef(instance: Instance, allocation: Allocation) -> FairnessReport:
    _require_partition(instance, allocation)
    verdicts = _agent_envy_verdicts(instance, allocation)
    tallies = _tallies(instance, verdicts)
    ok = all(t.satisfied >= majority_threshold(t.members) for t in tallies.values())
    return FairnessReport(Criterion.DEMOCRATIC_EF, ok, verdicts, tallies)


def _family_values(instance, allocation, normalize):
    table = {}
    for j, fam in enumerate(instance.families):
        w = family_average_measure(instance, j, normalize)
        table[fam.id] = {instance.families[jj].id: evaluate(w, p) for jj, p in enumerate(allocation.pieces)}
    return table


def check_average_ef(instance: Instance, allocation: Allocation, normalize: bool = False,
                     tolerance=Fraction(0)) -> FairnessReport:
    """Each family's averaged valuation weakly prefers its own piece.

    With a positive ``tolerance`` a family may value another piece at most
    that much more than its own (the approximate version used for three or
    more families).
    """
    _require_partition(instance, allocation)
    tolerance = Fraction(tolerance)
    table = _family_values(instance, allocation, normalize)
    verdicts = _agent_envy_verdicts(instance, allocation)
    ok = True
    for fam in instance.families:
        own = table[fam.id][fam.id]
        if any(v > own + tolerance for fid, v in table[fam.id].items() if fid != fam.id):
            ok = False
    return FairnessReport(Criterion.AVERAGE_EF, ok, verdicts, _tallies(instance, verdicts), table,
                          tolerance, normalize)


def family_envy(report: FairnessReport) -> dict[str, Fraction]:
    """Largest excess of another piece over the family's own, per family (0 if none)."""
    out = {}
    for fid, row in report.family_values.items():
        own = row[fid]
        out[fid] = max([v - own for other, v in row.items() if other != fid] + [Fraction(0)])
    return out


def check_proportional(instance: Instance, allocation: Allocation, variant: Criterion | str = Criterion.UNANIMOUS_PROP,
                       normalize: bool = False) -> FairnessReport:
    _require_partition(instance, allocation)
    variant = Criterion(variant)
    verdicts = _agent_prop_verdicts(instance, allocation)
    tallies = _tallies(instance, verdicts)
    if variant is Criterion.UNANIMOUS_PROP:
        ok = all(t.satisfied == t.members for t in tallies.values())
        return FairnessReport(variant, ok, verdicts, tallies)
    if variant is Criterion.DEMOCRATIC_PROP:
        ok = all(t.satisfied >= majority_threshold(t.members) for t in tallies.values())
        return FairnessReport(variant, ok, verdicts, tallies)
    if variant is Criterion.AVERAGE_PROP:
        table = _family_values(instance, allocation, normalize)
        ok = True
        for j, fam in enumerate(instance.families):
            whole = sum(table[fam.id].values(), Fraction(0))
            if table[fam.id][fam.id] < whole / instance.k:
                ok = False
        return FairnessReport(variant, ok, verdicts, tallies, table, Fraction(0), normalize)
    raise ValueError(f"{variant} is not a proportionality variant")


def check_individually_proportional(instance: Instance, allocation: Allocation,
                                    refinement: dict[str, Piece]) -> FairnessReport:
    """Check a given refinement: members' sub-pieces tile the family piece, each worth >= total/n."""
    _require_partition(instance, allocation)
    verdicts = {}
    ok = True
    for j, fam in enumerate(instance.families):
        subs = [refinement.get(a, Piece()) for a in fam.member_ids]
        union = Piece(tuple(iv for p in subs for iv in p))
        total_len = sum((p.length for p in subs), Fraction(0))
        if union != allocation[j] or total_len != allocation[j].length:
            ok = False
        for aid, sub in zip(fam.member_ids, subs):
            agent = instance.agent(aid)
            own, share = evaluate(agent, sub), agent.total / instance.n
            verdicts[aid] = AgentVerdict(fam.id, own >= share, own, None, share)
    tallies = _tallies(instance, verdicts)
    ok = ok and all(v.satisfied for v in verdicts.values())
    return FairnessReport(Criterion.INDIVIDUAL_PROP, ok, verdicts, tallies)


def positive_agent_tally(instance: Instance, allocation: Allocation) -> dict[str, int]:
    """Number of members in each family who value the family's piece above zero."""
    _require_partition(instance, allocation)
    return {
        fam.id: sum(evaluate(instance.agent(a), allocation[j]) > 0 for a in fam.member_ids)
        for j, fam in enumerate(instance.families)
    }


def check(instance: Instance, allocation: Allocation, criterion: Criterion | str, normalize: bool = False,
          tolerance=Fraction(0)) -> FairnessReport:
    criterion = Criterion(criterion)
    if criterion is Criterion.AVERAGE_EF:
        return check_average_ef(instance, allocation, normalize, tolerance)
    if criterion is Criterion.UNANIMOUS_EF:
        return check_unanimous_ef(instance, allocation)
    if criterion is Criterion.DEMOCRATIC_EF:
        return check_democratic_ef(instance, allocation)
    return check_proportional(instance, allocation, criterion, normalize)
