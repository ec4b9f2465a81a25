import pytest

from kbound.errors import ArityConflict, ArityMismatch, UnknownPredicate
from kbound.kernel import (
    Atom,
    AtomIndex,
    FactBase,
    Kind,
    Signature,
    Substitution,
    Term,
    apply_substitution,
    const,
    make_atom,
    term_inventory,
    var,
)

a, b = const("a"), const("b")
X, Y = var("X"), var("Y")


def test_term_equality_depends_on_kind_and_name():
    assert const("a") == a
    assert const("X") != var("X")
    assert len({a, const("a"), var("a")}) == 2


def test_terms_order_constants_then_variables_then_nulls():
    n = Term.fresh("R", "Z", "R(X=a)")
    assert sorted([n, X, b, a]) == [a, b, X, n]


def test_fresh_nulls_are_reproducible():
    n1 = Term.fresh("R", "Z", "R(X=a)")
    n2 = Term.fresh("R", "Z", "R(X=a)")
    n3 = Term.fresh("R", "Z", "R(X=b)")
    assert n1 == n2 and n1 != n3
    assert n1.kind is Kind.NULL and n1.is_variable and not n1.is_constant
    assert n1.origin == ("R", "Z", "R(X=a)")


def test_atom_value_semantics():
    assert Atom("p", [a, X]) == Atom("p", (a, X))
    assert Atom("p", [a, X]) != Atom("p", [X, a])
    assert Atom("p", [a, X]).terms == {a, X}
    assert Atom("q").arity == 0


def test_substitution_rejects_constants_in_domain():
    with pytest.raises(ValueError):
        Substitution({a: b})


def test_substitution_application_and_composition():
    s = Substitution({X: Y})
    t = Substitution({Y: a})
    assert s.atom(Atom("p", [X, b])) == Atom("p", [Y, b])
    both = s.compose(t)
    assert both.term(X) == a and both.term(Y) == a
    assert apply_substitution(both, [Atom("p", [X, Y])]) == {Atom("p", [a, a])}
    assert s.restrict([Y]) == Substitution()
    assert Substitution({X: a}) == {X: a}


def test_factbase_is_immutable_set_semantics():
    f = FactBase([Atom("p", [a, b]), Atom("p", [a, b]), Atom("q", [X])])
    assert len(f) == 2
    assert f == FactBase([Atom("q", [X]), Atom("p", [a, b])])
    assert hash(f) == hash(FactBase(f.atoms))
    g = f.with_atom(Atom("q", [a]))
    assert len(f) == 2 and len(g) == 3
    assert f.variables == {X} and f.constants == {a, b}
    assert [x.pred for x in f.with_pred("p")] == ["p"]


def test_atom_index_tracks_positions():
    idx = AtomIndex([Atom("p", [a, b]), Atom("p", [b, b])])
    assert idx.with_term_at("p", 1, b) == [Atom("p", [a, b]), Atom("p", [b, b])]
    assert not idx.add(Atom("p", [a, b]))
    idx.remove(Atom("p", [a, b]))
    assert idx.with_term_at("p", 0, a) == [] and len(idx) == 1


def test_term_inventory():
    vs, cs, ts = term_inventory([Atom("p", [a, X]), Atom("q", [Y])])
    assert vs == {X, Y} and cs == {a} and ts == {a, X, Y}


def test_signature_checks_arity():
    sig = Signature()
    sig.declare("p", 2)
    with pytest.raises(ArityConflict):
        sig.declare("p", 1)
    with pytest.raises(ArityMismatch):
        make_atom("p", [a], sig)
    with pytest.raises(UnknownPredicate):
        make_atom("q", [a], sig)
    assert make_atom("p", [a, b], sig) == Atom("p", [a, b])


def test_signature_inference_collects_constants():
    sig = Signature.infer([Atom("p", [a, X]), Atom("r", [])])
    assert sig.predicates == {"p": 2, "r": 0}
    assert sig.constants == {"a"}
    assert sig.max_arity == 2
