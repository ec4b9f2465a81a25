"""Existential rules, triggers and skolemization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidRule, SupportNotPresent
from .homo import find_homomorphisms
from .kernel import Atom, AtomIndex, FactBase, Kind, Signature, Substitution, Term, terms_of


@dataclass(frozen=True)
class Rule:
    """``body -> exists existentials. head`` with a non-empty body and head."""

    id: str
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]
    body_vars: tuple[Term, ...] = field(init=False, repr=False, compare=False)
    frontier: tuple[Term, ...] = field(init=False, repr=False, compare=False)
    existentials: tuple[Term, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.body or not self.head:
            raise InvalidRule(f"rule {self.id}: body and head must be non-empty")
        for a in self.body + self.head:
            for t in a.args:
                if t.kind == Kind.NULL:
                    raise InvalidRule(f"rule {self.id}: nulls cannot occur in rules")
        bvars = {t for a in self.body for t in a.args if t.is_variable}
        hvars = {t for a in self.head for t in a.args if t.is_variable}
        object.__setattr__(self, "body_vars", tuple(sorted(bvars)))
        object.__setattr__(self, "frontier", tuple(sorted(bvars & hvars)))
        object.__setattr__(self, "existentials", tuple(sorted(hvars - bvars)))

    @property
    def is_datalog(self) -> bool:
        return not self.existentials

    @property
    def constants(self) -> frozenset[Term]:
        return frozenset(t for t in terms_of(self.body + self.head) if t.is_constant)

    def __repr__(self) -> str:
        body = ", ".join(map(repr, self.body))
        head = ", ".join(map(repr, self.head))
        return f"{self.id}: {body} -> {head}"


def max_body_size(rules: Iterable[Rule]) -> int:
    return max((len(r.body) for r in rules), default=0)


def ruleset_signature(rules: Iterable[Rule], extra: Iterable[Atom] = ()) -> Signature:
    rules = list(rules)
    sig = Signature.infer([a for r in rules for a in r.body + r.head] + list(extra))
    sig.constants = frozenset(t.name for r in rules for t in r.constants)
    return sig


def ruleset_constants(rules: Iterable[Rule]) -> frozenset[Term]:
    return frozenset(t for r in rules for t in r.constants)


class Trigger:
    """A rule together with a homomorphism ``pi`` of its body.

    Two triggers are equal when they share the rule id and ``pi``. With
    ``naming="frontier"`` the fresh nulls depend only on the frontier image, so
    that triggers equal up to their frontier create the same nulls.
    """

    __slots__ = ("rule", "pi", "naming", "key", "_hash", "_output", "sort_key")

    def __init__(self, rule: Rule, pi: Substitution | dict, naming: str = "trigger"):
        if not isinstance(pi, Substitution):
            pi = Substitution(pi)
        missing = [v for v in rule.body_vars if v not in pi]
        if missing:
            raise InvalidRule(f"trigger for {rule.id} leaves {missing} unmapped")
        if len(pi) != len(rule.body_vars):
            pi = pi.restrict(rule.body_vars)
        self.rule = rule
        self.pi = pi
        self.naming = naming
        pairs = ",".join(f"{v.name}={pi[v].text}" for v in rule.body_vars)
        self.key = f"{rule.id}({pairs})"
        self._hash = hash(self.key)
        self._output: frozenset[Atom] | None = None
        self.sort_key: tuple = (rule.id, tuple(pi[v].sort_key for v in rule.body_vars))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trigger):
            return NotImplemented
        return self.key == other.key and self.pi == other.pi

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"({self.rule.id}, {self.pi!r})"

    def __lt__(self, other: "Trigger") -> bool:
        return self.sort_key < other.sort_key

    @property
    def frontier_image(self) -> tuple[Term, ...]:
        return tuple(self.pi[v] for v in self.rule.frontier)

    @property
    def so_class(self) -> tuple[str, tuple[Term, ...]]:
        return (self.rule.id, self.frontier_image)

    @property
    def support(self) -> frozenset[Atom]:
        return self.pi.atoms(self.rule.body)

    def null_for(self, z: Term) -> Term:
        if self.naming == "frontier":
            pairs = ",".join(f"{v.name}={self.pi[v].text}" for v in self.rule.frontier)
            key = f"{self.rule.id}[{pairs}]"
        else:
            key = self.key
        return Term.fresh(self.rule.id, z.name, key)

    @property
    def safe_extension(self) -> Substitution:
        ext = dict(self.pi)
        for z in self.rule.existentials:
            ext[z] = self.null_for(z)
        return Substitution(ext)

    @property
    def output(self) -> frozenset[Atom]:
        if self._output is None:
            self._output = self.safe_extension.atoms(self.rule.head)
        return self._output


def applicable_triggers(
    fb: FactBase | AtomIndex | Iterable[Atom], rules: Sequence[Rule], naming: str = "trigger"
) -> list[Trigger]:
    """All triggers whose body maps into ``fb``, sorted in term order."""
    target = fb if isinstance(fb, (FactBase, AtomIndex)) else FactBase(fb)
    out = []
    for r in rules:
        for h in find_homomorphisms(r.body, target):
            out.append(Trigger(r, h, naming))
    return sorted(out)


def new_triggers(
    index: AtomIndex, rules: Sequence[Rule], fresh: Iterable[Atom], naming: str = "trigger"
) -> set[Trigger]:
    """Triggers on ``index`` whose support meets the atoms in ``fresh``."""
    fresh = list(fresh)
    out: set[Trigger] = set()
    for r in rules:
        for i, b in enumerate(r.body):
            for a in fresh:
                if a.pred != b.pred or a.arity != b.arity:
                    continue
                seed: dict[Term, Term] = {}
                ok = True
                for s, t in zip(b.args, a.args):
                    if s.is_constant:
                        if s != t:
                            ok = False
                            break
                    elif seed.setdefault(s, t) != t:
                        ok = False
                        break
                if not ok:
                    continue
                rest = r.body[:i] + r.body[i + 1:]
                for h in find_homomorphisms(rest, index, fixed=seed):
                    out.add(Trigger(r, h, naming))
    return out


def immediate_derivation(fb: FactBase, t: Trigger) -> FactBase:
    """``fb`` together with the output of ``t``."""
    if not t.support <= fb.atoms:
        raise SupportNotPresent(f"support of {t!r} is not in the factbase")
    return FactBase(fb.atoms | t.output)


# -- skolemization ----------------------------------------------------------


@dataclass(frozen=True)
class SkolemTerm:
    rule_id: str
    var: str
    args: tuple[Term, ...]

    def __repr__(self) -> str:
        return f"f_{self.rule_id}^{self.var}({','.join(map(repr, self.args))})"


@dataclass(frozen=True)
class SkolemAtom:
    pred: str
    args: tuple[Term | SkolemTerm, ...]

    def __repr__(self) -> str:
        return f"{self.pred}({','.join(map(repr, self.args))})"


@dataclass(frozen=True)
class SkolemRule:
    id: str
    body: tuple[Atom, ...]
    head: SkolemAtom

    def __repr__(self) -> str:
        return f"{self.id}: {', '.join(map(repr, self.body))} -> {self.head!r}"


def skolemize(rules: Iterable[Rule]) -> list[Rule | SkolemRule]:
    """Replace existentials by Skolem terms over the frontier, one rule per head atom.

    Datalog rules are kept unchanged. Skolem arguments follow the order in
    which frontier variables first occur in the body.
    """
    out: list[Rule | SkolemRule] = []
    for rule in rules:
        if rule.is_datalog:
            out.append(rule)
            continue
        order: list[Term] = []
        frontier = set(rule.frontier)
        for a in rule.body:
            for t in a.args:
                if t in frontier and t not in order:
                    order.append(t)
        fterms = {z: SkolemTerm(rule.id, z.name, tuple(order)) for z in rule.existentials}
        for i, h in enumerate(rule.head, start=1):
            args = tuple(fterms.get(t, t) for t in h.args)
            rid = rule.id if len(rule.head) == 1 else f"{rule.id}.{i}"
            out.append(SkolemRule(rid, rule.body, SkolemAtom(h.pred, args)))
    return out
