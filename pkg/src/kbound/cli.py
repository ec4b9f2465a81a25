"""Command line interface: ``kbound chase`` and ``kbound bounded``.

Exit codes follow sysexits: 0 on success, 64 for usage errors, 65 for
malformed input and 66 for unreadable files. ``chase`` exits 2 when a cap
stopped the run. ``bounded`` exits 1 when the ruleset is not k-bounded and
2 when the budget ran out.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .bounded import VARIANTS, Budget, BoundednessQuery, decide, effective_variant
from .chase import ChaseOutcome, Derivation, Status, VariantPolicy, _applicable, run
from .errors import InvalidDerivation, InvalidQuery, KBoundError, ParseError
from .kernel import FactBase, Signature
from .syntax import (
    atom_text,
    derivation_dot,
    dumps,
    outcome_json,
    parse_facts,
    parse_json_atom,
    parse_rules,
    resolve_step,
    term_text,
    verdict_json,
)

EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(rules_path: str, facts_path: str | None):
    sig = Signature()
    rules = parse_rules(_read(rules_path), sig)
    facts = parse_facts(_read(facts_path), sig) if facts_path else FactBase()
    return rules, facts


def _text_outcome(outcome: ChaseOutcome) -> str:
    d = outcome.derivation
    lines = [
        f"variant: {outcome.policy.name}",
        f"status: {outcome.status.value}",
        f"depth: {d.depth}",
        f"triggers: {len(d.steps)}",
        f"atoms: {len(d.atoms)}",
    ]
    for a, r in sorted(d.rank.items(), key=lambda x: (x[1], x[0].sort_key)):
        lines.append(f"  {r}  {atom_text(a)}")
    return "\n".join(lines) + "\n"


def _replay(path: str, rules, facts: FactBase | None, policy: VariantPolicy) -> ChaseOutcome:
    data = json.loads(_read(path))
    if facts is None or not facts.atoms:
        initial = data.get("witnessFactbase") or data.get("initial") or []
        facts = FactBase(parse_json_atom(a) for a in initial)
    steps = data.get("witnessDerivation") or data.get("steps") or []
    d = Derivation(facts, rules)
    for i, s in enumerate(steps):
        t = resolve_step(i, s, rules, d)
        if not all(a in d.index for a in t.support):
            raise InvalidDerivation(i, f"support of {t!r} is not present")
        if t in d.applied or not _applicable(policy.variant, d, t):
            raise InvalidDerivation(i, f"{t!r} is not {policy.variant.value}-applicable")
        step = d.apply(t)
        if "rank" in s and s["rank"] != step.rank:
            raise InvalidDerivation(i, f"rank {step.rank} differs from recorded rank {s['rank']}")
    return ChaseOutcome(d, Status.TERMINATED, policy)


def cmd_chase(args: argparse.Namespace) -> int:
    rules, facts = _load(args.rules, args.facts)
    policy = VariantPolicy(args.variant, breadth_first=args.bf, tie_break=args.tie_break)
    if args.replay:
        outcome = _replay(args.replay, rules, facts if args.facts else None, policy)
    else:
        outcome = run(facts, rules, policy, max_depth=args.max_depth, max_triggers=args.max_triggers)
    if args.out == "json":
        sys.stdout.write(dumps(outcome_json(outcome)) + "\n")
    elif args.out == "dot":
        sys.stdout.write(derivation_dot(outcome.derivation))
    else:
        sys.stdout.write(_text_outcome(outcome))
    return 0 if outcome.status is Status.TERMINATED else 2


def _text_verdict(v) -> str:
    word = {True: "bounded", False: "not bounded", None: "unknown"}[v.bounded]
    lines = [
        f"query: {v.query.quantifier} {v.query.variant} k={v.query.k} (decided as {v.decided_as})",
        f"verdict: {word}" + (" (budget exceeded)" if v.budget_exceeded else ""),
        f"factbases checked: {v.factbases_checked}",
        f"derivations explored: {v.derivations_explored}",
    ]
    if v.witness_factbase is not None:
        lines.append("witness factbase: " + ", ".join(atom_text(a) for a in v.witness_factbase))
        lines.append("witness derivation:")
        for s in v.witness_derivation.steps:
            produced = ", ".join(atom_text(a) for a in s.produced)
            pi = ", ".join(f"{x.name}->{term_text(t)}" for x, t in sorted(s.trigger.pi.items()))
            lines.append(f"  rank {s.rank}: {s.trigger.rule.id} {{{pi}}} => {produced}")
    return "\n".join(lines) + "\n"


def cmd_bounded(args: argparse.Namespace) -> int:
    try:
        effective_variant(args.variant, args.quantifier)
    except InvalidQuery as e:
        raise UsageError(str(e)) from None
    rules, _ = _load(args.rules, None)
    budget = Budget(args.max_factbases, args.max_derivations, args.time_limit)
    v = decide(BoundednessQuery(rules, args.variant, args.k, args.quantifier), budget)
    if args.out == "json":
        sys.stdout.write(dumps(verdict_json(v)) + "\n")
    else:
        sys.stdout.write(_text_verdict(v))
    if v.budget_exceeded:
        return 2
    return 0 if v.bounded else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kbound", description="Chase variants and k-boundedness of existential rules.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("chase", help="run a chase variant on a knowledge base")
    c.add_argument("--rules", required=True, help="rule file")
    c.add_argument("--facts", help="fact file (default: empty)")
    c.add_argument("--variant", choices=["o", "so", "r", "e"], default="r")
    c.add_argument("--bf", action="store_true", help="breadth-first derivation")
    c.add_argument("--max-depth", type=int, default=100)
    c.add_argument("--max-triggers", type=int, default=100_000)
    c.add_argument("--tie-break", choices=["lex", "fifo"], default="lex")
    c.add_argument("--out", choices=["text", "json", "dot"], default="text")
    c.add_argument("--replay", metavar="JSON", help="replay the steps of a JSON derivation or verdict")
    c.set_defaults(func=cmd_chase)

    b = sub.add_parser("bounded", help="decide k-boundedness of a ruleset")
    b.add_argument("--rules", required=True, help="rule file")
    b.add_argument("--variant", choices=list(VARIANTS), required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--quantifier", choices=["all", "exists"], default="all")
    b.add_argument("--max-factbases", type=int, default=10**6)
    b.add_argument("--max-derivations", type=int, default=10**7)
    b.add_argument("--time-limit", type=float, default=600.0)
    b.add_argument("--out", choices=["json", "text"], default="text")
    b.set_defaults(func=cmd_bounded)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "k", 0) is not None and getattr(args, "k", 0) < 0:
        parser.error("--k must be non-negative")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"kbound: {e}", file=sys.stderr)
        return EX_USAGE
    except OSError as e:
        print(f"kbound: {e}", file=sys.stderr)
        return EX_NOINPUT
    except (ParseError, InvalidDerivation, KBoundError, ValueError) as e:
        print(f"kbound: {e}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
