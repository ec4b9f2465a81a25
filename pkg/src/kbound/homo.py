"""Homomorphisms, retractions, cores and canonical forms of atom sets."""

from __future__ import annotations

import heapq
from typing import Iterable, Iterator, Mapping

import numpy as np

from . import _accel
from .errors import NotASubset
from .kernel import Atom, AtomIndex, FactBase, Substitution, Term, terms_of

AtomSource = FactBase | AtomIndex | Iterable[Atom]


def _atom_key(a: Atom) -> tuple:
    return a.sort_key


def _as_index(target: AtomSource) -> AtomIndex:
    if isinstance(target, AtomIndex):
        return target
    if isinstance(target, FactBase):
        return target.index
    return AtomIndex(sorted(set(target)))


def _as_atoms(atoms: AtomSource) -> list[Atom]:
    if isinstance(atoms, FactBase):
        return list(atoms.sorted())
    if isinstance(atoms, AtomIndex):
        return sorted(atoms.atoms)
    return sorted(set(atoms))


def _order(source: list[Atom], bound: set[Term], index: AtomIndex) -> list[Atom]:
    """Greedy join order: most bound arguments first, then fewest candidates."""
    seen = set(bound)
    score = [sum(1 for t in a.args if t in seen or t.is_constant) for a in source]
    where: dict[Term, list[int]] = {}
    for i, a in enumerate(source):
        for t in a.args:
            if not t.is_constant and t not in seen:
                where.setdefault(t, []).append(i)
    sizes = {p: len(index.with_pred(p)) for p in {a.pred for a in source}}
    heap = [(-score[i], sizes[a.pred], a.sort_key, i) for i, a in enumerate(source)]
    heapq.heapify(heap)
    done = [False] * len(source)
    order = []
    # entries go stale when an atom gains a bound argument; those are skipped
    while heap:
        neg, _, _, i = heapq.heappop(heap)
        if done[i] or -neg != score[i]:
            continue
        done[i] = True
        a = source[i]
        order.append(a)
        for t in a.args:
            if t in seen or t.is_constant:
                continue
            seen.add(t)
            for j in where[t]:
                score[j] += 1
            for j in set(where[t]):
                if not done[j]:
                    b = source[j]
                    heapq.heappush(heap, (-score[j], sizes[b.pred], b.sort_key, j))
    return order


def _search(order: list[Atom], index: AtomIndex, binding: dict[Term, Term]) -> Iterator[dict[Term, Term]]:
    """Backtracking over ``order``; iterative so deep sources do not hit the recursion limit."""
    n = len(order)

    def candidates(atom: Atom) -> list[Atom]:
        best = None
        for i, t in enumerate(atom.args):
            img = t if t.is_constant else binding.get(t)
            if img is not None:
                cands = index.with_term_at(atom.pred, i, img)
                if best is None or len(cands) < len(best):
                    best = cands
                    if not best:
                        break
        if best is None:
            best = index.with_pred(atom.pred)
        return sorted(best, key=_atom_key) if len(best) > 1 else list(best)

    def bind(atom: Atom, cand: Atom) -> list[Term] | None:
        newly = []
        for s, t in zip(atom.args, cand.args):
            if s.is_constant:
                if s != t:
                    break
                continue
            b = binding.get(s)
            if b is None:
                binding[s] = t
                newly.append(s)
            elif b != t:
                break
        else:
            return newly
        for s in newly:
            del binding[s]
        return None

    if n == 0:
        yield dict(binding)
        return
    # per level: candidate list, next position, variables bound at this level
    stack: list[list] = [[candidates(order[0]), 0, []]]
    while stack:
        level = len(stack) - 1
        frame = stack[-1]
        for s in frame[2]:
            del binding[s]
        frame[2] = []
        cands = frame[0]
        advanced = False
        while frame[1] < len(cands):
            cand = cands[frame[1]]
            frame[1] += 1
            newly = bind(order[level], cand)
            if newly is None:
                continue
            frame[2] = newly
            advanced = True
            break
        if not advanced:
            stack.pop()
            continue
        if level + 1 == n:
            yield dict(binding)
        else:
            stack.append([candidates(order[level + 1]), 0, []])


def find_homomorphisms(
    source: Iterable[Atom],
    target: AtomSource,
    fixed: Mapping[Term, Term] | None = None,
    frozen: Iterable[Term] = (),
) -> Iterator[Substitution]:
    """Yield every homomorphism from ``source`` to ``target`` extending ``fixed``.

    Constants and ``frozen`` terms map to themselves. Results cover exactly the
    variables of ``source`` plus the keys of ``fixed``, in a deterministic
    order.
    """
    src = _as_atoms(source)
    index = _as_index(target)
    binding: dict[Term, Term] = dict(fixed or {})
    src_vars = {t for a in src for t in a.args if t.is_variable}
    for t in frozen:
        if t.is_variable and t in src_vars:
            if binding.setdefault(t, t) != t:
                return
    for a in src:
        if not index.with_pred(a.pred):
            return
    # atoms with every argument already fixed only need a membership test
    loose = []
    for a in src:
        if all(t.is_constant or t in binding for t in a.args):
            img = Atom(a.pred, [t if t.is_constant else binding[t] for t in a.args])
            if img not in index:
                return
        else:
            loose.append(a)
    order = _order(loose, set(binding), index)
    keep = src_vars | set(fixed or {})
    for h in _search(order, index, binding):
        yield Substitution({k: v for k, v in h.items() if k in keep})


def first_homomorphism(
    source: Iterable[Atom],
    target: AtomSource,
    fixed: Mapping[Term, Term] | None = None,
    frozen: Iterable[Term] = (),
) -> Substitution | None:
    return next(find_homomorphisms(source, target, fixed, frozen), None)


def _encode(source: list[Atom], target: list[Atom], frozen: set[Term]):
    """Integer encoding for the kernel, or None when no homomorphism can exist."""
    preds: dict[tuple[str, int], int] = {}
    tterms: dict[Term, int] = {}
    for a in target:
        preds.setdefault((a.pred, a.arity), len(preds))
        for t in a.args:
            tterms.setdefault(t, len(tterms))
    width = 1 + max((a.arity for a in source), default=0)
    tw = 1 + max((a.arity for a in target), default=0)
    width = max(width, tw)

    by_pred: dict[int, list[Atom]] = {}
    for a in target:
        by_pred.setdefault(preds[(a.pred, a.arity)], []).append(a)
    tgt = np.zeros((len(target), width), dtype=np.int64)
    pstart = np.zeros(max(len(preds), 1), dtype=np.int64)
    pend = np.zeros(max(len(preds), 1), dtype=np.int64)
    row = 0
    for p in range(len(preds)):
        pstart[p] = row
        for a in by_pred.get(p, ()):
            tgt[row, 0] = p
            for k, t in enumerate(a.args):
                tgt[row, 1 + k] = tterms[t]
            row += 1
        pend[p] = row

    index = AtomIndex(target)
    order = _order(source, set(frozen), index)
    slots: dict[Term, int] = {}
    src = np.zeros((len(order), width), dtype=np.int64)
    arity = np.zeros(len(order), dtype=np.int64)
    for i, a in enumerate(order):
        p = preds.get((a.pred, a.arity))
        if p is None:
            return None
        src[i, 0] = p
        arity[i] = a.arity
        for k, t in enumerate(a.args):
            if t.is_constant or t in frozen:
                tid = tterms.get(t)
                if tid is None:
                    return None
                src[i, 1 + k] = -tid - 1
            else:
                src[i, 1 + k] = slots.setdefault(t, len(slots))
    return src, arity, tgt, pstart, pend, len(slots)


def exists_homomorphism(
    source: AtomSource,
    target: AtomSource,
    frozen: Iterable[Term] = (),
    backend: str | None = None,
) -> bool:
    """Decide whether some homomorphism maps ``source`` into ``target``."""
    src = _as_atoms(source)
    if not src:
        return True
    enc = _encode(src, _as_atoms(target), set(frozen))
    if enc is None:
        return False
    return _accel.hom_exists(*enc, backend=backend)


def exists_retraction(source: AtomSource, target: AtomSource, backend: str | None = None) -> bool:
    """Is there a substitution that is the identity on ``terms(target)`` and maps ``source`` onto ``target``?

    ``target`` must be a subset of ``source``.
    """
    src = set(_as_atoms(source))
    tgt = set(_as_atoms(target))
    if not tgt <= src:
        raise NotASubset("retraction target must be a subset of the source")
    return exists_homomorphism(src, tgt, frozen=terms_of(tgt), backend=backend)


def core_of(atoms: AtomSource, backend: str | None = None) -> FactBase:
    """Return a core of the atom set that is also a retract of it.

    Atoms are visited in term order; an atom is dropped whenever the current
    set maps homomorphically into the set without it.
    """
    current = set(_as_atoms(atoms))
    for a in sorted(current):
        rest = current - {a}
        if rest and exists_homomorphism(current, rest, backend=backend):
            current = rest
    return FactBase(current)


# -- canonical forms -------------------------------------------------------


def _normalize(keys: list) -> list[int]:
    ranks = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [ranks[k] for k in keys]


class _Canon:
    def __init__(self, atoms: Iterable[Atom], pinned: frozenset[Term]):
        atoms = sorted(set(atoms))
        self.terms = sorted(terms_of(atoms))
        idx = {t: i for i, t in enumerate(self.terms)}
        self.enc = [(a.pred, tuple(idx[t] for t in a.args)) for a in atoms]
        self.encset = set(self.enc)
        self.n = len(self.terms)
        self.occ: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for ai, (_, args) in enumerate(self.enc):
            for pos, t in enumerate(args):
                self.occ[t].append((ai, pos))
        self.groups = []
        for t in self.terms:
            if t in pinned:
                self.groups.append((0, t.name))
            elif t.is_constant:
                self.groups.append((1, ""))
            else:
                self.groups.append((2, ""))
        self.best: tuple | None = None
        self.best_colors: list[int] | None = None
        self.autos: list[list[int]] = []
        self.twins: dict[tuple[int, int], bool] = {}

    def refine(self, colors: list[int]) -> list[int]:
        ncol = len(set(colors))
        while True:
            sigs = []
            for t in range(self.n):
                s = sorted(
                    (self.enc[ai][0], pos, tuple(colors[u] for u in self.enc[ai][1]))
                    for ai, pos in self.occ[t]
                )
                sigs.append((colors[t], tuple(s)))
            new = _normalize(sigs)
            k = len(set(new))
            if k == ncol:
                return new
            colors, ncol = new, k

    def is_twin(self, u: int, w: int) -> bool:
        key = (u, w) if u < w else (w, u)
        hit = self.twins.get(key)
        if hit is None:
            swap = {u: w, w: u}
            hit = all(
                (p, tuple(swap.get(t, t) for t in args)) in self.encset for p, args in self.enc
            )
            self.twins[key] = hit
        return hit

    def same_orbit(self, v: int, tried: list[int], cell: list[int], path: list[int]) -> bool:
        parent = list(range(self.n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.autos:
            if all(g[p] == p for p in path):
                for x in range(self.n):
                    parent[find(x)] = find(g[x])
        for w in tried:
            if find(v) == find(w) or self.is_twin(v, w):
                return True
        return False

    def leaf(self, colors: list[int]) -> None:
        key = tuple(sorted((p, tuple(colors[t] for t in args)) for p, args in self.enc))
        if self.best is None or key < self.best:
            self.best = key
            self.best_colors = colors
        elif key == self.best:
            inv = [0] * self.n
            for t, c in enumerate(self.best_colors):
                inv[c] = t
            self.autos.append([inv[colors[t]] for t in range(self.n)])

    def visit(self, colors: list[int], path: list[int]) -> None:
        cells: dict[int, list[int]] = {}
        for t, c in enumerate(colors):
            cells.setdefault(c, []).append(t)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            self.leaf(colors)
            return
        tried: list[int] = []
        for v in target:
            if tried and self.same_orbit(v, tried, target, path):
                continue
            tried.append(v)
            split = [2 * c for c in colors]
            split[v] -= 1
            self.visit(self.refine(_normalize(split)), path + [v])

    def run(self) -> None:
        self.visit(self.refine(_normalize(self.groups)), [])


def _labelled(atoms: Iterable[Atom], pinned: Iterable[Term]) -> _Canon:
    c = _Canon(atoms, frozenset(pinned))
    c.run()
    return c


def canonical_form(atoms: AtomSource, pinned: Iterable[Term] = ()) -> bytes:
    """Serialization shared by exactly the quasi-isomorphic atom sets.

    Constants and variables may be renamed (each within its kind); ``pinned``
    terms keep their identity.
    """
    return _serialize(_labelled(_as_atoms(atoms), pinned))


def _serialize(c: _Canon) -> bytes:
    labels = [""] * c.n
    for t, col in enumerate(c.best_colors or []):
        g = c.groups[t]
        labels[col] = "=" + g[1] if g[0] == 0 else "cv"[g[0] - 1]
    body = ";".join(f"{p}({','.join(map(str, args))})" for p, args in c.best or ())
    return (",".join(labels) + "|" + body).encode()


def canonical_representative(atoms: AtomSource, pinned: Iterable[Term] = ()) -> FactBase:
    """The quasi-isomorphic copy of ``atoms`` named after its canonical labelling."""
    return canonical_pair(atoms, pinned)[1]


def canonical_pair(atoms: AtomSource, pinned: Iterable[Term] = ()) -> tuple[bytes, FactBase]:
    """Canonical form and canonical representative from a single labelling."""
    pinned = frozenset(pinned)
    c = _labelled(_as_atoms(atoms), pinned)
    taken = {t.name for t in pinned}
    rename: dict[int, Term] = {}
    for t, col in enumerate(c.best_colors or []):
        term = c.terms[t]
        if term in pinned:
            rename[col] = term
        elif term.is_constant:
            name = f"c{col}"
            while name in taken:
                name += "_"
            rename[col] = Term.constant(name)
        else:
            rename[col] = Term.variable(f"V{col}")
    rep = FactBase(Atom(p, [rename[i] for i in args]) for p, args in c.best or ())
    return _serialize(c), rep


def quasi_isomorphic(a: AtomSource, b: AtomSource, pinned: Iterable[Term] = ()) -> bool:
    return canonical_form(a, pinned) == canonical_form(b, pinned)
