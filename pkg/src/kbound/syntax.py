"""Text syntax for rules and facts, plus JSON and DOT renderings.

Rules::

    # comment
    @R1 p(X,Y) -> q(Z,X).
    q(Z,X), r(X) -> p(X,W).

Facts::

    p(a,b), q(a,X).

Identifiers starting with a lowercase letter or a digit are predicates or
constants; those starting with an uppercase letter or ``_`` are variables.
Unlabelled rules get the id ``R<n>`` from their position in the file.
"""

from __future__ import annotations

import json
import re
from typing import Any, Iterable, Sequence

from .errors import ArityConflict, InvalidDerivation, ParseError
from .kernel import Atom, FactBase, Kind, Signature, Term
from .rules import Rule, Trigger

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)|(?P<arrow>->)|(?P<ident>[A-Za-z0-9_]+)|(?P<punct>[@(),.])"
)


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, str, int, int]] = []
        line, col, pos = 1, 1, 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            value = m.group()
            if kind == "nl":
                line, col = line + 1, 1
            else:
                if kind not in ("ws", "comment"):
                    self.items.append((kind if kind != "punct" else value, value, line, col))
                col += len(value)
            pos = m.end()
        self.items.append(("eof", "", line, col))
        self.i = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.items[self.i]

    def next(self) -> tuple[str, str, int, int]:
        tok = self.items[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> tuple[str, str, int, int]:
        tok = self.next()
        if tok[0] != kind:
            found = tok[1] or "end of input"
            raise ParseError(f"expected {what}, found {found!r}", tok[2], tok[3])
        return tok


def _term(name: str) -> Term:
    if name[0].isupper() or name[0] == "_":
        return Term.variable(name)
    return Term.constant(name)


def _atom(tokens: _Tokens, sig: Signature) -> Atom:
    kind, name, line, col = tokens.expect("ident", "a predicate")
    if not (name[0].islower() or name[0].isdigit()):
        raise ParseError(f"predicate {name!r} must start with a lowercase letter", line, col)
    args: list[Term] = []
    if tokens.peek()[0] == "(":
        tokens.next()
        if tokens.peek()[0] != ")":
            args.append(_term(tokens.expect("ident", "a term")[1]))
            while tokens.peek()[0] == ",":
                tokens.next()
                args.append(_term(tokens.expect("ident", "a term")[1]))
        tokens.expect(")", "')'")
    try:
        sig.declare(name, len(args))
    except ArityConflict as e:
        raise ArityConflict(f"line {line}, column {col}: {e}") from None
    return Atom(name, args)


def _atoms(tokens: _Tokens, sig: Signature) -> list[Atom]:
    out = [_atom(tokens, sig)]
    while tokens.peek()[0] == ",":
        tokens.next()
        out.append(_atom(tokens, sig))
    return out


def parse_rules(text: str, signature: Signature | None = None) -> list[Rule]:
    sig = signature if signature is not None else Signature()
    tokens = _Tokens(text)
    rules: list[Rule] = []
    ids: set[str] = set()
    while tokens.peek()[0] != "eof":
        _, _, line, col = tokens.peek()
        rid = f"R{len(rules) + 1}"
        if tokens.peek()[0] == "@":
            tokens.next()
            rid = tokens.expect("ident", "a rule id")[1]
        body = _atoms(tokens, sig)
        tokens.expect("arrow", "'->'")
        head = _atoms(tokens, sig)
        tokens.expect(".", "'.'")
        if rid in ids:
            raise ParseError(f"duplicate rule id {rid!r}", line, col)
        ids.add(rid)
        rules.append(Rule(rid, tuple(body), tuple(head)))
    return rules


def parse_facts(text: str, signature: Signature | None = None) -> FactBase:
    sig = signature if signature is not None else Signature()
    tokens = _Tokens(text)
    atoms: list[Atom] = []
    while tokens.peek()[0] != "eof":
        atoms.extend(_atoms(tokens, sig))
        tokens.expect(".", "'.'")
    return FactBase(atoms)


# -- printing -------------------------------------------------------------------


def term_text(t: Term) -> str:
    return "_" + t.name if t.kind == Kind.NULL else t.name


def atom_text(a: Atom) -> str:
    if not a.args:
        return a.pred
    return f"{a.pred}({','.join(term_text(t) for t in a.args)})"


def format_rule(r: Rule) -> str:
    body = ", ".join(atom_text(a) for a in r.body)
    head = ", ".join(atom_text(a) for a in r.head)
    return f"@{r.id} {body} -> {head}."


def format_rules(rules: Iterable[Rule]) -> str:
    return "".join(format_rule(r) + "\n" for r in rules)


def format_facts(atoms: Iterable[Atom]) -> str:
    return "".join(atom_text(a) + ".\n" for a in sorted(atoms))


# -- JSON -------------------------------------------------------------------------


def term_json(t: Term) -> str:
    return term_text(t) if t.is_constant else "?" + term_text(t)


def atom_json(a: Atom) -> str:
    return f"{a.pred}({','.join(term_json(t) for t in a.args)})"


def step_json(step) -> dict[str, Any]:
    t = step.trigger
    return {
        "rule": t.rule.id,
        "substitution": {v.name: term_json(t.pi[v]) for v in t.rule.body_vars},
        "rank": step.rank,
        "produced": [atom_json(a) for a in step.produced],
    }


def derivation_json(d) -> dict[str, Any]:
    return {
        "initial": [atom_json(a) for a in d.initial.sorted()],
        "steps": [step_json(s) for s in d.steps],
        "depth": d.depth,
    }


def outcome_json(outcome) -> dict[str, Any]:
    d = outcome.derivation
    out = {"variant": outcome.policy.name, "status": outcome.status.value}
    out.update(derivation_json(d))
    out["atoms"] = [
        {"atom": atom_json(a), "rank": r} for a, r in sorted(d.rank.items(), key=lambda x: (x[1], x[0].sort_key))
    ]
    return out


def verdict_json(v) -> dict[str, Any]:
    q = v.query
    return {
        "variant": q.variant,
        "quantifier": q.quantifier,
        "k": q.k,
        "decidedAs": v.decided_as,
        "bounded": v.bounded,
        "witnessFactbase": [atom_json(a) for a in v.witness_factbase.sorted()] if v.witness_factbase else None,
        "witnessDerivation": [step_json(s) for s in v.witness_derivation.steps] if v.witness_derivation else None,
        "counters": {
            "factbasesChecked": v.factbases_checked,
            "derivationsExplored": v.derivations_explored,
        },
        "budgetExceeded": v.budget_exceeded,
    }


def dumps(obj: dict[str, Any]) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


def parse_json_atom(text: str, lookup: dict[str, Term] | None = None) -> Atom:
    m = re.fullmatch(r"\s*([A-Za-z0-9_]+)\s*(?:\((.*)\))?\s*", text)
    if m is None:
        raise ValueError(f"malformed atom {text!r}")
    pred, inner = m.group(1), m.group(2)
    args = [] if not inner else [s.strip() for s in inner.split(",")]
    return Atom(pred, [json_term(s, lookup) for s in args])


def json_term(s: str, lookup: dict[str, Term] | None = None) -> Term:
    if lookup is not None and s in lookup:
        return lookup[s]
    if s.startswith("?"):
        return Term.variable(s[1:])
    return Term.constant(s)


def resolve_step(i: int, step: dict[str, Any], rules: Sequence[Rule], derivation) -> Trigger:
    """Turn a JSON step into a trigger, resolving terms against ``derivation``."""
    rule = next((r for r in rules if r.id == step.get("rule")), None)
    if rule is None:
        raise InvalidDerivation(i, f"unknown rule {step.get('rule')!r}")
    lookup = {term_json(t): t for t in derivation.term_count}
    names = {v.name: v for v in rule.body_vars}
    pi = {}
    for name, value in step.get("substitution", {}).items():
        if name not in names:
            raise InvalidDerivation(i, f"{name!r} is not a body variable of {rule.id}")
        pi[names[name]] = json_term(value, lookup)
    missing = sorted(set(names) - set(step.get("substitution", {})))
    if missing:
        raise InvalidDerivation(i, f"unmapped body variables {missing}")
    return Trigger(rule, pi, derivation.naming)


# -- DOT ----------------------------------------------------------------------------


def derivation_dot(d) -> str:
    """Chase graph: atoms labelled with their rank, one edge per (support atom, produced atom)."""
    g = d.graph()
    atoms = sorted(g.ranks, key=lambda a: (g.ranks[a], a.sort_key))
    ids = {a: f"n{i}" for i, a in enumerate(atoms)}
    lines = ["digraph chase {"]
    for a in atoms:
        label = f"{atom_text(a)} : {g.ranks[a]}".replace('"', '\\"')
        lines.append(f'  {ids[a]} [label="{label}"];')
    seen = set()
    for src, dst, t in g.edges:
        if (src, dst) in seen:
            continue
        seen.add((src, dst))
        lines.append(f'  {ids[src]} -> {ids[dst]} [label="{t.rule.id}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
