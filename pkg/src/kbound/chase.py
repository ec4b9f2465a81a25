"""Derivations, chase variants and the operations built on them.

A derivation is a sequence of triggers applied to an initial factbase. Each
atom gets the rank of the trigger that first produced it (0 for initial
atoms), and a trigger's rank is one more than the highest rank in its
support.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Sequence

from .errors import (
    AtomNotInDerivation,
    DuplicateTrigger,
    InvalidDerivation,
    NotASubset,
    NotTerminating,
    SupportNotPresent,
)
from .homo import canonical_form, exists_homomorphism, first_homomorphism
from .kernel import Atom, AtomIndex, FactBase, Term
from .rules import Rule, Trigger, new_triggers, ruleset_constants


class Variant(str, Enum):
    OBLIVIOUS = "o"
    SEMI_OBLIVIOUS = "so"
    RESTRICTED = "r"
    EQUIVALENT = "e"

    @classmethod
    def parse(cls, text: "str | Variant") -> "Variant":
        return text if isinstance(text, Variant) else cls(text.lower())


@dataclass(frozen=True)
class VariantPolicy:
    variant: Variant = Variant.OBLIVIOUS
    breadth_first: bool = False
    tie_break: str = "lex"

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.tie_break not in ("lex", "fifo", "random"):
            raise ValueError(f"unknown tie-break {self.tie_break!r}")

    @property
    def name(self) -> str:
        return ("bf-" if self.breadth_first else "") + self.variant.value


class Status(str, Enum):
    TERMINATED = "terminated"
    DEPTH_CAP = "depth-cap-reached"
    TRIGGER_CAP = "trigger-cap-reached"
    STALLED = "stalled"


@dataclass(frozen=True)
class Step:
    trigger: Trigger
    produced: tuple[Atom, ...]
    rank: int


@dataclass
class ChaseGraph:
    ranks: dict[Atom, int]
    edges: list[tuple[Atom, Atom, Trigger]]


def _by_key(x):
    return x.sort_key


class Derivation:
    """A trigger sequence over an initial factbase, built one step at a time.

    ``apply`` and ``undo`` mutate in place; use ``copy`` to branch. Triggers
    whose support is present are discovered incrementally and kept in
    ``known`` with their (fixed) rank.

    Setting ``horizon`` defers discovery from atoms of rank ``horizon`` or
    more; the deferred triggers are found on the first call to ``pending``.
    ``run`` uses this so that a depth cap does not pay for triggers it will
    never apply.
    """

    def __init__(self, initial: FactBase | Iterable[Atom], rules: Sequence[Rule] = (), naming: str = "trigger"):
        self.initial = initial if isinstance(initial, FactBase) else FactBase(initial)
        self.rules = tuple(rules)
        self.naming = naming
        self.steps: list[Step] = []
        self.index = AtomIndex(self.initial.sorted())
        self.rank: dict[Atom, int] = {a: 0 for a in self.initial.atoms}
        self.producer: dict[Atom, Trigger] = {}
        self.term_count: dict[Term, int] = {}
        for a in self.initial.atoms:
            for t in a.args:
                self.term_count[t] = self.term_count.get(t, 0) + 1
        self.applied: set[Trigger] = set()
        self.so_used: dict[tuple, int] = {}
        self.known: dict[Trigger, int] = {}
        self.seq: dict[Trigger, int] = {}
        self._discovered: list[list[Trigger]] = []
        self.horizon: int | None = None
        self._birth: dict[Atom, int] = {}  # deferred atom -> step index
        self._discover(self.initial.sorted())

    # -- bookkeeping --------------------------------------------------------

    def _discover(self, fresh: Sequence[Atom]) -> list[Trigger]:
        found = [t for t in new_triggers(self.index, self.rules, fresh, self.naming) if t not in self.known]
        found.sort(key=_by_key)
        for t in found:
            self.known[t] = 1 + max(self.rank[a] for a in t.support)
            self.seq[t] = len(self.seq)
        return found

    def copy(self) -> "Derivation":
        d = Derivation.__new__(Derivation)
        d.initial = self.initial
        d.rules = self.rules
        d.naming = self.naming
        d.steps = list(self.steps)
        d.index = AtomIndex()
        for a in self.index.atoms:
            d.index.add(a)
        d.rank = dict(self.rank)
        d.producer = dict(self.producer)
        d.term_count = dict(self.term_count)
        d.applied = set(self.applied)
        d.so_used = dict(self.so_used)
        d.known = dict(self.known)
        d.seq = dict(self.seq)
        d._discovered = [list(x) for x in self._discovered]
        d.horizon = self.horizon
        d._birth = dict(self._birth)
        return d

    def apply(self, t: Trigger) -> Step:
        if t in self.applied:
            raise DuplicateTrigger(repr(t))
        support = t.support
        if not all(a in self.index for a in support):
            raise SupportNotPresent(repr(t))
        r = 1 + max(self.rank[a] for a in support)
        produced = tuple(sorted(a for a in t.output if a not in self.index))
        for a in produced:
            self.index.add(a)
            self.rank[a] = r
            self.producer[a] = t
            for x in a.args:
                self.term_count[x] = self.term_count.get(x, 0) + 1
        self.applied.add(t)
        self.so_used[t.so_class] = self.so_used.get(t.so_class, 0) + 1
        step = Step(t, produced, r)
        self.steps.append(step)
        if produced and self.horizon is not None and r >= self.horizon:
            for a in produced:
                self._birth[a] = len(self.steps) - 1
            self._discovered.append([])
        else:
            self._discovered.append(self._discover(produced) if produced else [])
        return step

    def release(self) -> None:
        """Drop the horizon and discover the triggers it held back."""
        self.horizon = None
        if not self._birth:
            return
        birth, self._birth = self._birth, {}
        for t in self._discover(sorted(birth)):
            owner = max(birth.get(a, -1) for a in t.support)
            self._discovered[owner].append(t)

    def deferred(self) -> Iterator[Trigger]:
        """Triggers held back by the horizon, found one atom at a time and not recorded."""
        seen: set[Trigger] = set()
        for a in sorted(self._birth):
            for t in sorted(new_triggers(self.index, self.rules, [a], self.naming), key=_by_key):
                if t not in self.known and t not in seen:
                    seen.add(t)
                    yield t

    def undo(self) -> Step:
        step = self.steps.pop()
        for a in step.produced:
            self._birth.pop(a, None)
        for t in self._discovered.pop():
            del self.known[t]
            del self.seq[t]
        t = step.trigger
        self.applied.discard(t)
        n = self.so_used[t.so_class] - 1
        if n:
            self.so_used[t.so_class] = n
        else:
            del self.so_used[t.so_class]
        for a in step.produced:
            self.index.remove(a)
            del self.rank[a]
            del self.producer[a]
            for x in a.args:
                c = self.term_count[x] - 1
                if c:
                    self.term_count[x] = c
                else:
                    del self.term_count[x]
        return step

    # -- views ---------------------------------------------------------------

    @property
    def atoms(self) -> set[Atom]:
        return self.index.atoms

    def factbase(self) -> FactBase:
        return FactBase(self.index.atoms)

    @property
    def triggers(self) -> list[Trigger]:
        return [s.trigger for s in self.steps]

    @property
    def depth(self) -> int:
        return max(self.rank.values(), default=0)

    def __len__(self) -> int:
        return len(self.steps)

    def __repr__(self) -> str:
        return f"Derivation({len(self.steps)} steps, {len(self.index)} atoms, depth {self.depth})"

    def rank_of(self, atom: Atom) -> int:
        try:
            return self.rank[atom]
        except KeyError:
            raise AtomNotInDerivation(repr(atom)) from None

    def trigger_rank(self, t: Trigger) -> int:
        return 1 + max(self.rank_of(a) for a in t.support)

    def pending(self) -> Iterator[tuple[Trigger, int]]:
        """Known triggers not yet applied, with their ranks."""
        self.release()
        for t, r in self.known.items():
            if t not in self.applied:
                yield t, r

    def prefix(self, n: int) -> "Derivation":
        d = Derivation(self.initial, self.rules, self.naming)
        for s in self.steps[:n]:
            d.apply(s.trigger)
        return d

    def graph(self) -> ChaseGraph:
        edges = []
        for s in self.steps:
            for src in sorted(s.trigger.support):
                for dst in s.produced:
                    edges.append((src, dst, s.trigger))
        return ChaseGraph(dict(self.rank), edges)


def extend(d: Derivation, t: Trigger) -> Derivation:
    """A copy of ``d`` with ``t`` appended."""
    out = d.copy()
    out.apply(t)
    return out


# -- applicability -----------------------------------------------------------


def is_applicable(variant: Variant | VariantPolicy | str, d: Derivation, t: Trigger) -> bool:
    """X-applicability of ``t`` on the current factbase of ``d``."""
    if isinstance(variant, VariantPolicy):
        variant = variant.variant
    variant = Variant.parse(variant)
    if not all(a in d.index for a in t.support):
        raise SupportNotPresent(repr(t))
    return _applicable(variant, d, t)


def _applicable(variant: Variant, d: Derivation, t: Trigger) -> bool:
    if variant is Variant.OBLIVIOUS:
        return t not in d.applied
    if variant is Variant.SEMI_OBLIVIOUS:
        return t.so_class not in d.so_used
    out = t.output
    if all(a in d.index for a in out):
        return False
    if variant is Variant.RESTRICTED:
        # a retraction of F + output onto F may only move the terms that are new in output
        frozen = [x for a in out for x in a.args if x in d.term_count]
        return first_homomorphism(out, d.index, frozen=frozen) is None
    return not exists_homomorphism(d.index.atoms | out, d.index)


def _producing(d: Derivation, t: Trigger) -> bool:
    return any(a not in d.index for a in t.output)


# -- scheduling ---------------------------------------------------------------


@dataclass
class ChaseOutcome:
    derivation: Derivation
    status: Status
    policy: VariantPolicy

    @property
    def depth(self) -> int:
        return self.derivation.depth

    @property
    def terminated(self) -> bool:
        return self.status is Status.TERMINATED


class _Queue:
    """Pending triggers ordered by the policy's tie-break (and rank in bf mode)."""

    def __init__(self, d: Derivation, policy: VariantPolicy, seed: int | None):
        self.d = d
        self.bf = policy.breadth_first
        self.tie = policy.tie_break
        self.rng = random.Random(seed)
        self.prio: dict[Trigger, float] = {}
        self.heap: list = []

    def key(self, t: Trigger, rank: int) -> tuple:
        if self.tie == "lex":
            k = t.sort_key
        elif self.tie == "fifo":
            k = self.d.seq[t]
        else:
            k = self.prio.setdefault(t, self.rng.random())
        return (rank, k) if self.bf else (k,)

    def push(self, t: Trigger, rank: int) -> None:
        heapq.heappush(self.heap, (self.key(t, rank), rank, t))

    def pop(self) -> tuple[Trigger, int]:
        _, rank, t = heapq.heappop(self.heap)
        return t, rank

    def peek_rank(self) -> int:
        return self.heap[0][1]

    def __bool__(self) -> bool:
        return bool(self.heap)


def run(
    initial: FactBase | Iterable[Atom],
    rules: Sequence[Rule],
    policy: VariantPolicy | None = None,
    max_depth: int = 100,
    max_triggers: int = 100_000,
    naming: str = "trigger",
    seed: int | None = None,
) -> ChaseOutcome:
    """Chase ``initial`` with ``rules`` under ``policy``.

    Triggers of rank above ``max_depth`` are never applied; if one of them is
    still applicable at the end the run reports ``DEPTH_CAP``. In breadth-first
    mode each rank is saturated before the next one starts, re-checking
    applicability after every step.
    """
    policy = policy or VariantPolicy()
    variant = policy.variant
    d = Derivation(initial, rules, naming)
    d.horizon = max_depth
    q = _Queue(d, policy, seed)
    for t, r in d.known.items():
        q.push(t, r)
    dormant: list[tuple[Trigger, int]] = []  # equivalent chase: may become applicable again
    held: list[tuple[Trigger, int]] = []  # above the depth cap
    current = 1

    def schedule(step: Step) -> None:
        for t in d._discovered[-1]:
            q.push(t, d.known[t])
        if variant is Variant.EQUIVALENT and step.produced and dormant:
            for t, r in dormant:
                q.push(t, r)
            dormant.clear()

    while q:
        t, r = q.pop()
        if t in d.applied:
            continue
        if r > max_depth:
            held.append((t, r))
            continue
        if policy.breadth_first and r > current:
            if any(_applicable(variant, d, x) for x, _ in dormant):
                # an equivalent-chase trigger of a finished rank came back
                q.push(t, r)
                return ChaseOutcome(d, Status.STALLED, policy)
            current = r
        if not _applicable(variant, d, t):
            if variant is Variant.EQUIVALENT:
                dormant.append((t, r))
            continue
        if policy.breadth_first and r < current:
            dormant.append((t, r))
            continue
        if len(d.steps) >= max_triggers:
            return ChaseOutcome(d, Status.TRIGGER_CAP, policy)
        schedule(d.apply(t))

    if any(t not in d.applied and _applicable(variant, d, t) for t, _ in held):
        return ChaseOutcome(d, Status.DEPTH_CAP, policy)
    if any(r > max_depth and t not in d.applied and _applicable(variant, d, t) for t, r in d.known.items()):
        return ChaseOutcome(d, Status.DEPTH_CAP, policy)
    # everything behind the horizon is above the cap; one applicable trigger settles it
    if any(_applicable(variant, d, t) for t in d.deferred()):
        return ChaseOutcome(d, Status.DEPTH_CAP, policy)
    if any(_applicable(variant, d, t) for t, _ in dormant):
        return ChaseOutcome(d, Status.STALLED, policy)
    return ChaseOutcome(d, Status.TERMINATED, policy)


# -- validation ---------------------------------------------------------------


def applicable_now(d: Derivation, variant: Variant, max_rank: int | None = None) -> list[tuple[Trigger, int]]:
    out = []
    for t, r in d.pending():
        if max_rank is not None and r > max_rank:
            continue
        if _applicable(variant, d, t):
            out.append((t, r))
    return sorted(out, key=lambda x: (x[1], x[0].sort_key))


def is_terminating(d: Derivation, variant: Variant | str) -> bool:
    """No trigger is X-applicable on the final factbase of ``d``."""
    return not applicable_now(d, Variant.parse(variant))


def is_rank_compatible(d: Derivation) -> bool:
    ranks = [s.rank for s in d.steps]
    return all(a <= b for a, b in zip(ranks, ranks[1:]))


def replay(
    initial: FactBase | Iterable[Atom],
    rules: Sequence[Rule],
    triggers: Iterable[Trigger],
    policy: VariantPolicy | None = None,
    naming: str = "trigger",
) -> Derivation:
    """Rebuild a derivation, checking X-applicability of every step when a policy is given."""
    d = Derivation(initial, rules, naming)
    for i, t in enumerate(triggers):
        if not all(a in d.index for a in t.support):
            raise InvalidDerivation(i, f"support of {t!r} is not present")
        if t in d.applied:
            raise InvalidDerivation(i, f"{t!r} applied twice")
        if policy is not None and not _applicable(policy.variant, d, t):
            raise InvalidDerivation(i, f"{t!r} is not {policy.variant.value}-applicable")
        d.apply(t)
    if policy is not None and policy.breadth_first and not is_breadth_first(d, policy, complete=False):
        raise InvalidDerivation(len(d.steps), "not breadth-first")
    return d


def is_breadth_first(d: Derivation, policy: VariantPolicy | Variant | str, complete: bool = True) -> bool:
    """Rank-compatible, an X-derivation, and saturated at every rank mark.

    At a rank mark no X-applicable trigger of rank at most the current rank may
    remain. With ``complete`` the end of the derivation counts as a rank mark.
    """
    variant = policy.variant if isinstance(policy, VariantPolicy) else Variant.parse(policy)
    if not is_rank_compatible(d):
        return False
    p = Derivation(d.initial, d.rules, d.naming)
    n = len(d.steps)
    for i, s in enumerate(d.steps):
        if not all(a in p.index for a in s.trigger.support) or not _applicable(variant, p, s.trigger):
            return False
        p.apply(s.trigger)
        mark = i + 1 < n and d.steps[i + 1].rank > s.rank
        if mark or (complete and i + 1 == n):
            if applicable_now(p, variant, max_rank=s.rank):
                return False
    return True


# -- chase graph ----------------------------------------------------------------


def ancestors(d: Derivation, atom: Atom) -> set[Atom]:
    """Atoms with a non-empty path to ``atom`` in the chase graph."""
    d.rank_of(atom)
    seen: set[Atom] = set()
    stack = [atom]
    while stack:
        a = stack.pop()
        t = d.producer.get(a)
        if t is None:
            continue
        for b in t.support:
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


def prime_ancestors(d: Derivation, atom: Atom) -> set[Atom]:
    """Initial atoms among the ancestors (empty for an initial atom)."""
    return {a for a in ancestors(d, atom) if d.rank[a] == 0}


def restrict(d: Derivation, subset: Iterable[Atom]) -> Derivation:
    """Replay the triggers of ``d`` from ``subset``, skipping those whose support is missing."""
    g = FactBase(subset)
    if not g.atoms <= d.initial.atoms:
        raise NotASubset("restriction must start from a subset of the initial factbase")
    out = Derivation(g, d.rules, d.naming)
    out.horizon = 0  # nothing needs the pending triggers while replaying
    for s in d.steps:
        if all(a in out.index for a in s.trigger.support):
            out.apply(s.trigger)
    return out


def to_rank_compatible(d: Derivation, max_rounds: int = 64) -> Derivation:
    """Reorder a terminating restricted derivation so that ranks never decrease.

    Triggers are stably sorted by rank and replayed, keeping those that are
    still R-applicable. Replaying can lower ranks, so the sort is repeated
    until the replay is rank-compatible.
    """
    if not is_terminating(d, Variant.RESTRICTED):
        raise NotTerminating("derivation still has restricted-applicable triggers")
    current = d
    for _ in range(max_rounds):
        order = sorted(current.steps, key=lambda s: s.rank)
        out = Derivation(d.initial, d.rules, d.naming)
        for s in order:
            t = s.trigger
            if all(a in out.index for a in t.support) and _applicable(Variant.RESTRICTED, out, t):
                out.apply(t)
        if is_rank_compatible(out):
            return out
        current = out
    raise RuntimeError("reordering did not converge")


# -- exhaustive enumeration -----------------------------------------------------


def _state_atoms(d: Derivation, variant: Variant, bf_rank: int | None, with_applied: bool) -> list[Atom]:
    out = [Atom(f"{a.pred}#{r}", a.args) for a, r in d.rank.items()]
    if variant is Variant.SEMI_OBLIVIOUS:
        for s in d.steps:
            rid, img = s.trigger.so_class
            out.append(Atom(f"@so:{rid}", img))
    elif variant is Variant.OBLIVIOUS and with_applied:
        for s in d.steps:
            t = s.trigger
            out.append(Atom(f"@t:{t.rule.id}", [t.pi[v] for v in t.rule.body_vars]))
    if bf_rank is not None:
        out.append(Atom(f"@rank:{bf_rank}", ()))
    return out


@dataclass
class SearchStats:
    nodes: int = 0
    leaves: int = 0


@dataclass
class DerivationSearch:
    """Depth-first enumeration of X-derivations up to a depth bound.

    Every yielded derivation either has no applicable continuation or ends
    with the first atom of rank ``max_depth + 1``. ``memo`` collapses states
    that are equal (``"exact"``) or quasi-isomorphic (``"canonical"``) once
    ranks and the variant's bookkeeping are taken into account.

    With ``producing_only`` the oblivious and semi-oblivious variants skip
    triggers whose output is already present. Such steps add no atom and
    never enable another trigger, so they cannot change which ranks are
    reachable.
    """

    rules: Sequence[Rule]
    policy: VariantPolicy
    max_depth: int
    memo: str | None = "canonical"
    producing_only: bool = False
    naming: str = "trigger"
    stats: SearchStats = field(default_factory=SearchStats)
    should_stop: Callable[[], bool] | None = None
    visited: set = field(default_factory=set)

    def __post_init__(self) -> None:
        self.pinned = ruleset_constants(self.rules)

    def _key(self, d: Derivation, bf_rank: int | None):
        variant = self.policy.variant
        atoms = _state_atoms(d, variant, bf_rank, with_applied=not self.producing_only)
        if self.memo == "canonical":
            return canonical_form(atoms, self.pinned)
        return frozenset(atoms)

    def _moves(self, d: Derivation, bf_rank: int) -> tuple[list[Trigger], int]:
        variant = self.policy.variant
        skip_idle = self.producing_only and variant in (Variant.OBLIVIOUS, Variant.SEMI_OBLIVIOUS)
        cands = []
        for t, r in d.pending():
            if self.policy.breadth_first and r not in (bf_rank, bf_rank + 1):
                continue
            if r > self.max_depth and not _producing(d, t):
                continue
            if skip_idle and not _producing(d, t):
                continue
            if _applicable(variant, d, t):
                cands.append((r, t))
        if self.policy.breadth_first:
            now = [t for r, t in cands if r == bf_rank]
            if now:
                return sorted(now), bf_rank
            return sorted(t for r, t in cands if r == bf_rank + 1), bf_rank + 1
        cands.sort(key=lambda x: x[1].sort_key)
        return [t for _, t in cands], bf_rank

    def search(self, initial: FactBase | Iterable[Atom]) -> Iterator[Derivation]:
        d = Derivation(initial, self.rules, self.naming)
        yield from self._walk(d, 0)

    def _walk(self, d: Derivation, bf_rank: int) -> Iterator[Derivation]:
        self.stats.nodes += 1
        if self.should_stop is not None and self.should_stop():
            return
        moves, next_rank = self._moves(d, bf_rank)
        if not moves:
            self.stats.leaves += 1
            yield d.copy()
            return
        for t in moves:
            step = d.apply(t)
            if step.rank > self.max_depth and step.produced:
                self.stats.leaves += 1
                yield d.copy()
                d.undo()
                continue
            rank_after = next_rank if self.policy.breadth_first else 0
            if self.memo is not None:
                key = self._key(d, rank_after if self.policy.breadth_first else None)
                if key in self.visited:
                    d.undo()
                    continue
                self.visited.add(key)
            yield from self._walk(d, rank_after)
            d.undo()


def enumerate_derivations(
    initial: FactBase | Iterable[Atom],
    rules: Sequence[Rule],
    policy: VariantPolicy,
    max_depth: int,
    memo: str | None = "canonical",
    producing_only: bool = False,
    naming: str = "trigger",
) -> Iterator[Derivation]:
    return DerivationSearch(rules, policy, max_depth, memo, producing_only, naming).search(initial)


def check_ancestry_preservation(
    rules: Sequence[Rule], d: Derivation, atom: Atom, policy: VariantPolicy
) -> tuple[bool, Derivation | None]:
    """Can some X-derivation from the prime ancestors of ``atom`` produce it at the same rank?

    Returns the answer and, when it is yes, a witness derivation.
    """
    r = d.rank_of(atom)
    if r == 0:
        return True, Derivation([atom], rules, d.naming)
    primes = prime_ancestors(d, atom)
    for e in enumerate_derivations(primes, rules, policy, max_depth=r, memo="exact", naming=d.naming):
        if e.rank.get(atom) == r:
            return True, e
    return False, None
