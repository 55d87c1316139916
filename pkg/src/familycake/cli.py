"""Command-line entry point: ``familycake <subcommand> ...``.

Exit status: 0 when the verified result holds, 1 when a check fails, 2 for
unreadable input or bad parameters, 3 when a solver gives up (budget or
scale guard).  JSON outputs go to ``--output-dir`` (default: the value of
``FAMILYCAKE_OUTPUT_DIR``, else the current directory) and record the seed.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import fairness, hardness, protocols
from .core import Interval, component_count
from .errors import BoundViolation, CakeError, InvalidPartition, ParameterError, ParseError
from .exact import ExactDivisionProblem, solve, verify_exact
from .io import (allocation_from_dict, allocation_to_dict, format_rational, load_instance, parse_rational,
                 read_json, report_to_dict, write_json)
from .query import (AdversaryOracle, Eval, Mark, certify_no_average_piece, materialize, random_protocol,
                    replay_check, run_protocol, scripted_protocol)
from .render import render_svg

log = logging.getLogger("familycake")

CRITERIA = {
    "average": fairness.Criterion.AVERAGE_EF,
    "unanimous": fairness.Criterion.UNANIMOUS_EF,
    "democratic": fairness.Criterion.DEMOCRATIC_EF,
    "average-prop": fairness.Criterion.AVERAGE_PROP,
    "unanimous-prop": fairness.Criterion.UNANIMOUS_PROP,
    "democratic-prop": fairness.Criterion.DEMOCRATIC_PROP,
}
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GAVE_UP = 0, 1, 2, 3


def _rational_arg(text):
    try:
        return parse_rational(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _output_dir(args) -> Path:
    out = Path(args.output_dir or os.environ.get("FAMILYCAKE_OUTPUT_DIR") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, name, doc) -> Path:
    path = _output_dir(args) / name
    write_json(path, {"seed": args.seed, **doc})
    return path


def _family_table(instance, report) -> str:
    lines = []
    for fam in instance.families:
        t = report.per_family.get(fam.id)
        row = f"{fam.id:>8}  satisfied {t.satisfied}/{t.members}" if t else f"{fam.id:>8}"
        if report.family_values:
            vals = ", ".join(f"{o}={format_rational(v)}" for o, v in report.family_values[fam.id].items())
            row += f"  averages: {vals}"
        lines.append(row)
        for aid in fam.member_ids:
            v = report.per_agent.get(aid)
            if v is None:
                continue
            mark = "ok " if v.satisfied else "ENVY" if v.rival else "LOW"
            vs = f"vs {v.rival}={format_rational(v.rival_value)}" if v.rival else \
                f"share {format_rational(v.rival_value)}"
            lines.append(f"{'':>10}{mark} {aid}: own {format_rational(v.own)} {vs}")
    return "\n".join(lines)


def cmd_check(args) -> int:
    instance = load_instance(args.instance)
    alloc, _ = allocation_from_dict(read_json(args.allocation), [f.id for f in instance.families])
    report = fairness.check(instance, alloc, CRITERIA[args.criterion], args.normalize, args.tolerance)
    print(f"{report.criterion.value}: {'satisfied' if report.satisfied else 'VIOLATED'}")
    print(_family_table(instance, report))
    _emit(args, args.report, {"report": report_to_dict(report)})
    return EXIT_OK if report.satisfied else EXIT_FAIL


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    if args.criterion == "average":
        result = protocols.average_ef_connected(instance, args.normalize, args.epsilon)
    elif args.criterion == "unanimous":
        result = protocols.unanimous_ef_divide(instance)
    elif instance.k == 2:
        result = protocols.democratic_two_families(instance)
    else:
        result = protocols.democratic_general(instance)
    tol = args.epsilon if args.criterion == "average" and instance.k >= 3 else Fraction(0)
    # re-check independently of the procedure's own certificate
    report = fairness.check(instance, result.allocation, result.criterion_claimed, args.normalize, tol)
    ids = [f.id for f in instance.families]
    _emit(args, "allocation.json", allocation_to_dict(result.allocation, ids))
    _emit(args, "certificate.json", {"components": result.components, "queries_used": result.queries_used,
                                     "report": report_to_dict(report)})
    if args.svg:
        (_output_dir(args) / "allocation.svg").write_text(render_svg(result.allocation, instance.cake, ids))
    print(f"{report.criterion.value}: {'satisfied' if report.satisfied else 'VIOLATED'}, "
          f"{result.components} components")
    for fid, piece in zip(ids, result.allocation.pieces):
        print(f"{fid:>8}  {piece}")
    return EXIT_OK if report.satisfied else EXIT_FAIL


def cmd_exact(args) -> int:
    instance = load_instance(args.instance)
    problem = ExactDivisionProblem(instance.agents, args.pieces, args.budget, args.epsilon, instance.cake)
    alloc = solve(problem)
    tol = args.epsilon or Fraction(0)
    ok, worst = verify_exact(instance.agents, alloc, tol)
    comps = component_count(alloc)
    within = problem.epsilon is not None or comps <= problem.component_budget
    ids = [f"P{j + 1}" for j in range(args.pieces)]
    _emit(args, "allocation.json", allocation_to_dict(alloc, ids))
    _emit(args, "exact.json", {"verified": ok, "worst_deviation": format_rational(worst), "components": comps,
                               "component_budget": problem.component_budget,
                               "epsilon": None if args.epsilon is None else format_rational(args.epsilon)})
    print(f"{'exact' if problem.exact else 'approximate'} division into {args.pieces} pieces: "
          f"{'verified' if ok else 'FAILED'} (worst deviation {format_rational(worst)}), {comps} components")
    for pid, piece in zip(ids, alloc.pieces):
        print(f"{pid:>4}  {piece}")
    return EXIT_OK if ok and within else EXIT_FAIL


def _script_queries(path):
    doc = read_json(path)
    items = doc.get("queries") if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise ParseError("script must be a list of queries or an object with 'queries'", str(path))
    out = []
    for i, q in enumerate(items):
        loc = f"queries[{i}]"
        if not isinstance(q, dict) or q.get("kind") not in ("eval", "mark"):
            raise ParseError("expected {kind: eval|mark, ...}", loc)
        try:
            if q["kind"] == "eval":
                out.append(Eval(str(q["agent"]), parse_rational(q["left"], loc), parse_rational(q["right"], loc)))
            else:
                out.append(Mark(str(q["agent"]), parse_rational(q["start"], loc), parse_rational(q["target"], loc)))
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", loc) from None
    return out


def cmd_adversary(args) -> int:
    oracle = AdversaryOracle(args.strategy)
    if args.script:
        protocol = scripted_protocol(_script_queries(args.script))
    else:
        protocol = random_protocol(random.Random(args.seed), args.steps)
    transcript = run_protocol(protocol, oracle, args.steps)
    for state in oracle.history:
        certify_no_average_piece(state)
    cert = certify_no_average_piece(oracle.state)
    mismatches = replay_check(transcript, materialize(oracle.state))
    sums = cert.reachable_sums if len(cert) <= 100_000 else None
    steps = []
    for s in transcript.steps:
        q = s.query
        entry = {"kind": "eval", "agent": q.agent, "left": format_rational(q.left), "right": format_rational(q.right)} \
            if isinstance(q, Eval) else \
            {"kind": "mark", "agent": q.agent, "start": format_rational(q.start), "target": format_rational(q.target)}
        entry["answer"] = format_rational(s.answer)
        steps.append(entry)
    _emit(args, "adversary.json", {
        "steps": steps,
        "known_points": [format_rational(p) for p in oracle.state.points],
        "cell_values": {name: [format_rational(v) for v in vals]
                        for name, vals in zip(("V1", "V2"), oracle.state.values)},
        "reachable_sums": None if sums is None else [format_rational(v) for v in sums],
        "reachable_count": len(cert),
        "one_reachable": cert.contains_one,
        "replay_mismatches": mismatches,
    })
    print(f"{len(transcript)} queries, {len(oracle.state.points)} known points")
    if sums is not None and len(sums) <= 64:
        print("reachable sums: {" + ", ".join(str(format_rational(v)) for v in sums) + "}")
    else:
        print(f"reachable sums: {len(cert)} values")
    print("certificate: 1 is not a reachable sum" + ("" if not mismatches else f"; REPLAY MISMATCH {mismatches}"))
    return EXIT_OK if not mismatches else EXIT_FAIL


def cmd_lower_bound(args) -> int:
    cert = hardness.verify_positivity_bound(args.k, args.m, args.q, args.exhaustive_limit, args.method)
    ids = [f"F{j + 1}" for j in range(args.k)]
    fmt = format_rational
    _emit(args, "lower_bound.json", {
        "k": cert.k, "m": cert.m, "q": cert.q, "n": cert.n,
        "formula": fmt(cert.formula), "formula_ceiling": cert.formula_ceiling,
        "search_value": cert.search_value, "holds": cert.holds,
        "majority_formula": None if cert.majority_formula is None else fmt(cert.majority_formula),
        "unanimous_bound": cert.unanimous_bound,
        "infeasible_lengths": list(cert.infeasible_lengths),
        "finitization": cert.finitization,
        "method": args.method,
        "witness": allocation_to_dict(cert.witness, ids),
    })
    print(f"LB({cert.k},{cert.m}) q={cert.q}: search minimum {cert.search_value} components; "
          f"bound ceil({fmt(cert.formula)}) = {cert.formula_ceiling}; holds")
    return EXIT_OK


def cmd_render(args) -> int:
    if args.instance:
        instance = load_instance(args.instance)
        ids = [f.id for f in instance.families]
        alloc, _ = allocation_from_dict(read_json(args.allocation), ids)
        cake = instance.cake
    else:
        alloc, ids = allocation_from_dict(read_json(args.allocation))
        ivs = [iv for p in alloc.pieces for iv in p]
        if not ivs:
            raise ParseError("allocation has no intervals; pass --instance to give the cake")
        cake = Interval(min(iv.left for iv in ivs), max(iv.right for iv in ivs))
    path = _output_dir(args) / args.out
    path.write_text(render_svg(alloc, cake, ids))
    print(path)
    return EXIT_OK


def _global_flags(p, default: bool):
    d = (lambda v: v) if default else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(0), help="seed for randomized runs (recorded in outputs)")
    p.add_argument("--output-dir", default=d(None), help="directory for output files (env FAMILYCAKE_OUTPUT_DIR)")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="familycake", description="Exact cake cutting among families.")
    _global_flags(p, default=True)
    # the same flags after the subcommand; SUPPRESS keeps them from overwriting earlier values
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, default=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    c = add("check", help="check a fairness criterion for an allocation")
    c.add_argument("instance")
    c.add_argument("allocation")
    c.add_argument("--criterion", choices=sorted(CRITERIA), required=True)
    c.add_argument("--normalize", action="store_true")
    c.add_argument("--tolerance", type=_rational_arg, default=Fraction(0))
    c.add_argument("--report", default="report.json", help="report file name inside the output directory")
    c.set_defaults(func=cmd_check)

    s = add("solve", help="run a division procedure")
    s.add_argument("instance")
    s.add_argument("--criterion", choices=["average", "unanimous", "democratic"], required=True)
    s.add_argument("--epsilon", type=_rational_arg)
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--svg", action="store_true", help="also write allocation.svg")
    s.set_defaults(func=cmd_solve)

    e = add("exact", help="exact division of the instance's agents (families ignored)")
    e.add_argument("instance")
    e.add_argument("--pieces", type=int, required=True)
    e.add_argument("--budget", type=int)
    e.add_argument("--epsilon", type=_rational_arg)
    e.set_defaults(func=cmd_exact)

    a = add("adversary", help="play a protocol against the average-piece adversary")
    a.add_argument("--steps", type=int, default=20, help="maximum number of queries")
    a.add_argument("--script", help="JSON list of queries to replay instead of a random protocol")
    a.add_argument("--strategy", choices=["lattice", "gap"], default="lattice")
    a.set_defaults(func=cmd_adversary)

    lb = add("lower-bound", help="certify the positivity lower bound on LB(k, m)")
    lb.add_argument("--k", type=int, required=True)
    lb.add_argument("--m", type=int, required=True)
    lb.add_argument("--q", type=int, required=True)
    lb.add_argument("--exhaustive-limit", type=int, default=hardness.DEFAULT_EXHAUSTIVE_LIMIT)
    lb.add_argument("--method", choices=["dp", "patterns"], default="dp")
    lb.set_defaults(func=cmd_lower_bound)

    r = add("render", help="draw an allocation as an SVG strip chart")
    r.add_argument("allocation")
    r.add_argument("--instance")
    r.add_argument("--out", default="allocation.svg")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ParseError, ParameterError, InvalidPartition) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BoundViolation as exc:
        print(f"BOUND VIOLATED: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CakeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GAVE_UP
    except ValueError as exc:
        # invalid partitions and similar input problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
