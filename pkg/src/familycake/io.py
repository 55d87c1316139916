"""JSON encoding of instances, allocations and reports.

Rationals travel as strings ``"p/q"`` (or plain integers).  Floats are
rejected outright so that no rounding can sneak in through a file.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

from .core import Agent, Allocation, Family, Instance, Interval, Piece, StepMeasure
from .errors import ParseError

_RATIONAL = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(value, location=None) -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"expected a rational, got {value!r}", location)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        m = _RATIONAL.match(value)
        if m:
            num, den = int(m.group(1)), int(m.group(2) or 1)
            if den == 0:
                raise ParseError(f"zero denominator in {value!r}", location)
            return Fraction(num, den)
    raise ParseError(f"expected a rational string 'p/q' or an integer, got {value!r}", location)


def format_rational(x: Fraction) -> str | int:
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _pair(value, location):
    if not isinstance(value, list) or len(value) != 2:
        raise ParseError("expected a two-element list", location)
    return parse_rational(value[0], f"{location}[0]"), parse_rational(value[1], f"{location}[1]")


def instance_to_dict(instance: Instance) -> dict:
    agents = []
    for a in instance.agents:
        agents.append({
            "id": a.id,
            "family": instance.families[instance.family_index_of(a.id)].id,
            "density": [[format_rational(l), format_rational(r), format_rational(d)]
                        for l, r, d in a.measure.segments()],
        })
    return {
        "cake": [format_rational(instance.cake.left), format_rational(instance.cake.right)],
        "families": [f.id for f in instance.families],
        "agents": agents,
    }


def instance_from_dict(doc) -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("instance document must be an object")
    if "cake" not in doc or "agents" not in doc:
        raise ParseError("instance needs 'cake' and 'agents'")
    left, right = _pair(doc["cake"], "cake")
    try:
        cake = Interval(left, right)
    except ValueError as exc:
        raise ParseError(str(exc), "cake") from None
    if not isinstance(doc["agents"], list):
        raise ParseError("expected a list", "agents")
    order = list(doc.get("families") or [])
    members: dict[str, list[str]] = {fid: [] for fid in order}
    agents = []
    for i, entry in enumerate(doc["agents"]):
        loc = f"agents[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("expected an object", loc)
        try:
            aid, fid, density = str(entry["id"]), str(entry["family"]), entry["density"]
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", loc) from None
        segments = []
        for s, seg in enumerate(density):
            sloc = f"{loc}.density[{s}]"
            if not isinstance(seg, list) or len(seg) != 3:
                raise ParseError("expected [left, right, density]", sloc)
            segments.append(tuple(parse_rational(v, f"{sloc}[{t}]") for t, v in enumerate(seg)))
        try:
            measure = StepMeasure.from_segments(cake, segments)
        except ValueError as exc:
            raise ParseError(str(exc), loc) from None
        agents.append(Agent(aid, measure))
        members.setdefault(fid, []).append(aid)
    try:
        families = tuple(Family(fid, tuple(ids)) for fid, ids in members.items())
        return Instance(cake, tuple(agents), families)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def allocation_to_dict(allocation: Allocation, family_ids=None) -> dict:
    family_ids = family_ids or [f"F{j + 1}" for j in range(len(allocation))]
    return {"pieces": [
        {"family": fid, "intervals": [[format_rational(iv.left), format_rational(iv.right)] for iv in piece]}
        for fid, piece in zip(family_ids, allocation.pieces)
    ]}


def allocation_from_dict(doc, family_ids=None) -> tuple[Allocation, list[str]]:
    """Decode an allocation; with ``family_ids`` the pieces are reordered to match."""
    if not isinstance(doc, dict) or not isinstance(doc.get("pieces"), list):
        raise ParseError("allocation document needs a 'pieces' list")
    by_family: dict[str, Piece] = {}
    for p, entry in enumerate(doc["pieces"]):
        loc = f"pieces[{p}]"
        if not isinstance(entry, dict) or "intervals" not in entry:
            raise ParseError("expected an object with 'intervals'", loc)
        fid = str(entry.get("family", f"F{p + 1}"))
        if fid in by_family:
            raise ParseError(f"duplicate family {fid!r}", loc)
        ivs = []
        for t, pair in enumerate(entry["intervals"]):
            a, b = _pair(pair, f"{loc}.intervals[{t}]")
            try:
                ivs.append(Interval(a, b))
            except ValueError as exc:
                raise ParseError(str(exc), f"{loc}.intervals[{t}]") from None
        by_family[fid] = Piece(tuple(ivs))
    if family_ids is None:
        ids = list(by_family)
    else:
        ids = list(family_ids)
        unknown = set(by_family) - set(ids)
        if unknown:
            raise ParseError(f"pieces for unknown families {sorted(unknown)}")
    return Allocation(tuple(by_family.get(fid, Piece()) for fid in ids)), ids


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(str(exc), str(path)) from None
    try:
        return json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None


def _reject_float(text):
    raise ParseError(f"floating point literal {text} not allowed; write it as a 'p/q' string")


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_instance(path) -> Instance:
    return instance_from_dict(read_json(path))


def load_allocation(path, instance: Instance | None = None) -> Allocation:
    ids = [f.id for f in instance.families] if instance is not None else None
    return allocation_from_dict(read_json(path), ids)[0]


def report_to_dict(report) -> dict:
    fmt = format_rational
    return {
        "criterion": report.criterion.value,
        "satisfied": report.satisfied,
        "tolerance": fmt(report.tolerance),
        "normalized": report.normalized,
        "per_agent": {
            aid: {"family": v.family, "satisfied": v.satisfied, "own": fmt(v.own), "rival": v.rival,
                  "rival_value": fmt(v.rival_value)}
            for aid, v in report.per_agent.items()
        },
        "per_family": {fid: {"satisfied": t.satisfied, "members": t.members} for fid, t in report.per_family.items()},
        "family_values": {fid: {other: fmt(v) for other, v in row.items()}
                          for fid, row in report.family_values.items()},
    }


def report_from_dict(doc):
    from .fairness import AgentVerdict, Criterion, FairnessReport, FamilyTally

    try:
        pr = parse_rational
        return FairnessReport(
            Criterion(doc["criterion"]),
            bool(doc["satisfied"]),
            {aid: AgentVerdict(v["family"], bool(v["satisfied"]), pr(v["own"]), v["rival"], pr(v["rival_value"]))
             for aid, v in doc.get("per_agent", {}).items()},
            {fid: FamilyTally(int(t["satisfied"]), int(t["members"])) for fid, t in doc.get("per_family", {}).items()},
            {fid: {o: pr(v) for o, v in row.items()} for fid, row in doc.get("family_values", {}).items()},
            pr(doc.get("tolerance", 0)),
            bool(doc.get("normalized", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed report: {exc}") from None
