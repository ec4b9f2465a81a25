"""Terms, atoms, substitutions and factbases.

Everything here is immutable and hashable except :class:`AtomIndex`, the
mutable lookup structure shared by factbases and derivations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, Mapping

from .errors import ArityConflict, ArityMismatch, UnknownPredicate


class Kind(IntEnum):
    CONSTANT = 0
    VARIABLE = 1
    NULL = 2


class Term:
    """A constant, a variable, or a fresh null created by a trigger.

    Terms order by kind (constants, then variables, then nulls) and then by
    name. A null carries its origin ``(rule_id, variable, trigger_key)`` and
    its name is derived from that origin, so the same trigger always yields
    the same null.
    """

    __slots__ = ("kind", "name", "origin", "_hash", "sort_key")

    def __init__(self, kind: Kind, name: str, origin: tuple[str, str, str] | None = None):
        self.kind = kind
        self.name = name
        self.origin = origin
        self._hash = hash((int(kind), name))
        self.sort_key: tuple[int, str] = (int(kind), name)

    @staticmethod
    def constant(name: str) -> "Term":
        return Term(Kind.CONSTANT, name)

    @staticmethod
    def variable(name: str) -> "Term":
        return Term(Kind.VARIABLE, name)

    @staticmethod
    def fresh(rule_id: str, var: str, key: str) -> "Term":
        digest = hashlib.blake2b(key.encode(), digest_size=8).hexdigest()
        return Term(Kind.NULL, f"{var}_{rule_id}_{digest}", (rule_id, var, key))

    @property
    def is_constant(self) -> bool:
        return self.kind == Kind.CONSTANT

    @property
    def is_variable(self) -> bool:
        """True for variables and nulls, i.e. anything a homomorphism may move."""
        return self.kind != Kind.CONSTANT

    @property
    def text(self) -> str:
        """Unambiguous text used inside trigger keys."""
        return "cvn"[self.kind] + ":" + self.name

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Term):
            return NotImplemented
        return self.kind == other.kind and self.name == other.name and self.origin == other.origin

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Term") -> bool:
        return self.sort_key < other.sort_key

    def __le__(self, other: "Term") -> bool:
        return self.sort_key <= other.sort_key

    def __repr__(self) -> str:
        return self.name


def const(name: str) -> Term:
    return Term.constant(name)


def var(name: str) -> Term:
    return Term.variable(name)


class Atom:
    __slots__ = ("pred", "args", "_hash", "sort_key")

    def __init__(self, pred: str, args: Iterable[Term] = ()):
        self.pred = pred
        self.args = tuple(args)
        self._hash = hash((pred, self.args))
        self.sort_key: tuple = (pred, tuple(t.sort_key for t in self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def terms(self) -> frozenset[Term]:
        return frozenset(self.args)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Atom):
            return NotImplemented
        return self._hash == other._hash and self.pred == other.pred and self.args == other.args

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Atom") -> bool:
        return self.sort_key < other.sort_key

    def __repr__(self) -> str:
        return f"{self.pred}({','.join(map(repr, self.args))})"


def terms_of(atoms: Iterable[Atom]) -> set[Term]:
    out: set[Term] = set()
    for a in atoms:
        out.update(a.args)
    return out


class Substitution(Mapping[Term, Term]):
    """A finite mapping from variables/nulls to terms."""

    __slots__ = ("_map", "_hash")

    def __init__(self, mapping: Mapping[Term, Term] | Iterable[tuple[Term, Term]] = ()):
        m = dict(mapping)
        for k in m:
            if k.is_constant:
                raise ValueError(f"constant {k!r} cannot be in a substitution domain")
        self._map = m
        self._hash: int | None = None

    def __getitem__(self, key: Term) -> Term:
        return self._map[key]

    def __iter__(self) -> Iterator[Term]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Substitution):
            return self._map == other._map
        if isinstance(other, Mapping):
            return self._map == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}->{v!r}" for k, v in sorted(self._map.items()))
        return "{" + inner + "}"

    def term(self, t: Term) -> Term:
        return self._map.get(t, t)

    def atom(self, a: Atom) -> Atom:
        m = self._map
        return Atom(a.pred, [m.get(t, t) for t in a.args])

    def atoms(self, atoms: Iterable[Atom]) -> frozenset[Atom]:
        return frozenset(self.atom(a) for a in atoms)

    def compose(self, then: "Substitution") -> "Substitution":
        """Apply ``self`` first and ``then`` second."""
        out = {k: then.term(v) for k, v in self._map.items()}
        for k, v in then.items():
            out.setdefault(k, v)
        return Substitution({k: v for k, v in out.items() if k != v})

    def restrict(self, keys: Iterable[Term]) -> "Substitution":
        ks = set(keys)
        return Substitution({k: v for k, v in self._map.items() if k in ks})

    def sorted_items(self) -> list[tuple[Term, Term]]:
        return sorted(self._map.items())


def apply_substitution(sub: Mapping[Term, Term], atoms: Iterable[Atom]) -> frozenset[Atom]:
    return frozenset(Atom(a.pred, [sub.get(t, t) for t in a.args]) for a in atoms)


class AtomIndex:
    """Mutable set of atoms indexed by predicate and by (predicate, position, term)."""

    __slots__ = ("atoms", "by_pred", "by_pos")

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.atoms: set[Atom] = set()
        self.by_pred: dict[str, list[Atom]] = {}
        self.by_pos: dict[tuple[str, int, Term], list[Atom]] = {}
        for a in atoms:
            self.add(a)

    def add(self, atom: Atom) -> bool:
        if atom in self.atoms:
            return False
        self.atoms.add(atom)
        self.by_pred.setdefault(atom.pred, []).append(atom)
        for i, t in enumerate(atom.args):
            self.by_pos.setdefault((atom.pred, i, t), []).append(atom)
        return True

    def remove(self, atom: Atom) -> None:
        self.atoms.remove(atom)
        self.by_pred[atom.pred].remove(atom)
        for i, t in enumerate(atom.args):
            self.by_pos[(atom.pred, i, t)].remove(atom)

    def with_pred(self, pred: str) -> list[Atom]:
        return self.by_pred.get(pred, [])

    def with_term_at(self, pred: str, pos: int, term: Term) -> list[Atom]:
        return self.by_pos.get((pred, pos, term), [])

    def __contains__(self, atom: object) -> bool:
        return atom in self.atoms

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)


class FactBase:
    """An immutable finite set of atoms with lookup indexes."""

    __slots__ = ("atoms", "index", "_sorted", "_hash")

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.atoms = frozenset(atoms)
        self.index = AtomIndex(sorted(self.atoms))
        self._sorted: tuple[Atom, ...] | None = None
        self._hash: int | None = None

    def sorted(self) -> tuple[Atom, ...]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self.atoms))
        return self._sorted

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: object) -> bool:
        return atom in self.atoms

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FactBase):
            return self.atoms == other.atoms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.atoms)
        return self._hash

    def __repr__(self) -> str:
        return "{" + ", ".join(map(repr, self.sorted())) + "}"

    def union(self, atoms: Iterable[Atom]) -> "FactBase":
        return FactBase(self.atoms | frozenset(atoms))

    def with_atom(self, atom: Atom) -> "FactBase":
        if atom in self.atoms:
            return self
        return FactBase(self.atoms | {atom})

    def with_pred(self, pred: str) -> list[Atom]:
        return self.index.with_pred(pred)

    @property
    def terms(self) -> frozenset[Term]:
        return frozenset(terms_of(self.atoms))

    @property
    def variables(self) -> frozenset[Term]:
        return frozenset(t for t in self.terms if t.is_variable)

    @property
    def constants(self) -> frozenset[Term]:
        return frozenset(t for t in self.terms if t.is_constant)


def term_inventory(fb: FactBase | Iterable[Atom]) -> tuple[frozenset[Term], frozenset[Term], frozenset[Term]]:
    """Return (variables, constants, all terms)."""
    ts = frozenset(terms_of(fb))
    return (
        frozenset(t for t in ts if t.is_variable),
        frozenset(t for t in ts if t.is_constant),
        ts,
    )


@dataclass
class Signature:
    """Predicate arities plus the constants that rules mention by name."""

    predicates: dict[str, int] = field(default_factory=dict)
    constants: frozenset[str] = frozenset()

    def declare(self, pred: str, arity: int) -> None:
        known = self.predicates.get(pred)
        if known is not None and known != arity:
            raise ArityConflict(f"predicate {pred} used with arities {known} and {arity}")
        self.predicates[pred] = arity

    def check(self, atom: Atom) -> None:
        if atom.pred not in self.predicates:
            raise UnknownPredicate(atom.pred)
        if self.predicates[atom.pred] != atom.arity:
            raise ArityMismatch(
                f"{atom.pred} has arity {self.predicates[atom.pred]}, got {atom.arity}"
            )

    @property
    def max_arity(self) -> int:
        return max(self.predicates.values(), default=0)

    @classmethod
    def infer(cls, atoms: Iterable[Atom]) -> "Signature":
        sig = cls()
        consts = set()
        for a in atoms:
            sig.declare(a.pred, a.arity)
            consts.update(t.name for t in a.args if t.is_constant)
        sig.constants = frozenset(consts)
        return sig


def make_atom(pred: str, args: Iterable[Term], signature: Signature) -> Atom:
    atom = Atom(pred, args)
    signature.check(atom)
    return atom
