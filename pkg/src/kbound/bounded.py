"""Deciding k-boundedness for the oblivious, semi-oblivious and restricted chases.

A ruleset is k-bounded for a variant when no derivation of that variant, from
any factbase, produces an atom of rank k+1. Every atom of rank at most k+1 has
at most b^(k+1) prime ancestors (b being the largest body size), and derivations
restricted to those ancestors keep the atom at its rank. So it is enough to look
at factbases of that size, one per quasi-isomorphism class.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .chase import (
    Derivation,
    DerivationSearch,
    Variant,
    VariantPolicy,
    _applicable,
    _producing,
    run,
)
from .errors import BudgetExceeded, EmptyRuleset, InvalidQuery
from .homo import canonical_pair
from .kernel import Atom, FactBase, Signature, Term
from .rules import Rule, max_body_size, ruleset_signature

VARIANTS = ("o", "bfo", "so", "bfso", "r", "bfr")


def policy_for(variant: str) -> VariantPolicy:
    """Map ``o``, ``bfo``, ``so``, ``bfso``, ``r``, ``bfr`` to a policy."""
    if variant not in VARIANTS:
        raise InvalidQuery(f"unknown variant {variant!r}")
    bf = variant.startswith("bf")
    return VariantPolicy(Variant(variant[2:] if bf else variant), breadth_first=bf)


def prime_bound(rules: Sequence[Rule], k: int) -> int:
    """Largest number of prime ancestors an atom of rank k+1 can have."""
    if not rules:
        raise EmptyRuleset("the ruleset is empty")
    return max_body_size(rules) ** (k + 1)


@dataclass
class EnumerationSpec:
    signature: Signature
    max_atoms: int
    constants_only: bool = True

    @property
    def pinned(self) -> frozenset[Term]:
        return frozenset(Term.constant(c) for c in self.signature.constants)


def enumerate_factbases(spec: EnumerationSpec, check: Callable[[], None] | None = None) -> Iterator[FactBase]:
    """Yield one factbase per quasi-isomorphism class, by increasing size.

    Classes of size n+1 are found by adding one atom to each class of size n
    and keeping the additions whose canonical form is new. Terms of the
    signature's constants stay fixed. Within a size the order is the
    (deterministic) order of discovery.
    """
    pinned = spec.pinned
    preds = sorted(spec.signature.predicates.items())
    level: list[FactBase] = [FactBase()]
    for _ in range(spec.max_atoms):
        seen: set[bytes] = set()
        nxt: list[FactBase] = []
        for fb in level:
            for atom in _extensions(fb, preds, pinned, spec.constants_only):
                if check is not None:
                    check()
                key, rep = canonical_pair(fb.atoms | {atom}, pinned)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append(rep)
                yield rep
        level = nxt


def _extensions(fb: FactBase, preds, pinned: frozenset[Term], constants_only: bool) -> Iterator[Atom]:
    existing = sorted(fb.terms | pinned)
    for pred, arity in preds:
        fresh_c = [Term.constant(f"_new{i}") for i in range(arity)]
        fresh_v = [Term.variable(f"_New{i}") for i in range(arity)]

        def rec(prefix: list[Term], nc: int, nv: int) -> Iterator[Atom]:
            if len(prefix) == arity:
                atom = Atom(pred, prefix)
                if atom not in fb.atoms:
                    yield atom
                return
            # new terms are introduced in order, so each pattern shows up once
            options = existing + fresh_c[: nc + 1] + ([] if constants_only else fresh_v[: nv + 1])
            for t in options:
                yield from rec(
                    prefix + [t],
                    nc + (t is fresh_c[nc] if nc < arity else 0),
                    nv + (t is fresh_v[nv] if nv < arity else 0),
                )

        yield from rec([], 0, 0)


@dataclass
class BoundednessQuery:
    rules: Sequence[Rule]
    variant: str
    k: int
    quantifier: str = "all"


@dataclass
class Budget:
    max_factbases: int = 10**6
    max_derivations: int = 10**7
    time_limit: float = 600.0


@dataclass
class Verdict:
    query: BoundednessQuery
    bounded: bool | None
    decided_as: str
    witness_factbase: FactBase | None = None
    witness_derivation: Derivation | None = None
    factbases_checked: int = 0
    derivations_explored: int = 0
    budget_exceeded: bool = False
    elapsed: float = 0.0
    notes: list[str] = field(default_factory=list)


def effective_variant(variant: str, quantifier: str) -> str:
    """The universal variant that answers the query.

    For the oblivious and semi-oblivious chases some derivation is k-bounded
    exactly when all breadth-first ones are, so the existential question is
    answered on the breadth-first variant. The existential question is not
    supported for the restricted chases.
    """
    if variant not in VARIANTS:
        raise InvalidQuery(f"unknown variant {variant!r}")
    if quantifier == "all":
        return variant
    if quantifier != "exists":
        raise InvalidQuery(f"unknown quantifier {quantifier!r}")
    if variant in ("r", "bfr"):
        raise InvalidQuery("existential k-boundedness is not supported for restricted chases")
    return "bfo" if variant in ("o", "bfo") else "bfso"


def single_run_witness(fb: FactBase, rules: Sequence[Rule], policy: VariantPolicy, k: int) -> Derivation | None:
    """Breadth-first oblivious/semi-oblivious check: one run decides the factbase.

    Ranks up to k are saturated; any applicable rank-(k+1) trigger that adds an
    atom is a counterexample.
    """
    out = run(fb, rules, policy, max_depth=k, max_triggers=10**9)
    d = out.derivation
    for t, r in sorted(d.pending(), key=lambda x: (x[1], x[0].sort_key)):
        if r == k + 1 and _producing(d, t) and _applicable(policy.variant, d, t):
            d.apply(t)
            return d
    return None


class Decider:
    """Searches the factbases of one query for a derivation reaching rank k+1."""

    def __init__(self, query: BoundednessQuery, budget: Budget | None = None):
        self.query = query
        self.budget = budget or Budget()
        self.variant = effective_variant(query.variant, query.quantifier)
        self.policy = policy_for(self.variant)
        self.start = time.monotonic()
        self.factbases = 0
        self.search = DerivationSearch(
            list(query.rules),
            self.policy,
            max_depth=query.k,
            memo="canonical",
            producing_only=True,
            should_stop=self._over_budget,
        )
        self.single_runs = 0

    def _over_budget(self) -> bool:
        return (
            self.search.stats.nodes + self.single_runs > self.budget.max_derivations
            or time.monotonic() - self.start > self.budget.time_limit
        )

    def _check_time(self) -> None:
        if time.monotonic() - self.start > self.budget.time_limit:
            raise BudgetExceeded

    def witness_for(self, fb: FactBase) -> Derivation | None:
        p = self.policy
        if p.breadth_first and p.variant in (Variant.OBLIVIOUS, Variant.SEMI_OBLIVIOUS):
            self.single_runs += 1
            return single_run_witness(fb, self.query.rules, p, self.query.k)
        for d in self.search.search(fb):
            if d.depth > self.query.k:
                return d
        return None

    def decide(self) -> Verdict:
        q = self.query
        v = Verdict(q, None, self.variant)
        rules = list(q.rules)
        if not rules:
            v.bounded = True
            v.notes.append("empty ruleset")
            return v
        spec = EnumerationSpec(
            ruleset_signature(rules),
            prime_bound(rules, q.k),
            constants_only=self.policy.variant is not Variant.RESTRICTED,
        )
        try:
            for fb in enumerate_factbases(spec, check=self._check_time):
                if self.factbases >= self.budget.max_factbases:
                    raise BudgetExceeded
                self.factbases += 1
                w = self.witness_for(fb)
                if self._over_budget():
                    raise BudgetExceeded
                if w is not None:
                    v.bounded = False
                    v.witness_factbase = fb
                    v.witness_derivation = w
                    break
            else:
                v.bounded = True
        except BudgetExceeded:
            v.budget_exceeded = True
            v.bounded = None
        v.factbases_checked = self.factbases
        v.derivations_explored = self.search.stats.nodes + self.single_runs
        v.elapsed = time.monotonic() - self.start
        return v


def decide(query: BoundednessQuery, budget: Budget | None = None) -> Verdict:
    return Decider(query, budget).decide()
