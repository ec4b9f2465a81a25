import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbound.errors import InvalidRule, SupportNotPresent
from kbound.kernel import Atom, FactBase, Kind, Term, const, var
from kbound.rules import (
    Rule,
    SkolemTerm,
    Trigger,
    applicable_triggers,
    immediate_derivation,
    max_body_size,
    skolemize,
)
from kbound.syntax import parse_facts, parse_rules

a, b, c = const("a"), const("b"), const("c")
X, Y, Z = var("X"), var("Y"), var("Z")


def test_rule_variable_classes():
    (r,) = parse_rules("@R p(X,W,Y) -> q(X,Z1), t(Z1,Z2,Y).")
    assert [v.name for v in r.frontier] == ["X", "Y"]
    assert [v.name for v in r.existentials] == ["Z1", "Z2"]
    assert [v.name for v in r.body_vars] == ["W", "X", "Y"]
    assert not r.is_datalog


def test_rules_need_body_and_head():
    with pytest.raises(InvalidRule):
        Rule("R", (), (Atom("p", [X]),))
    with pytest.raises(InvalidRule):
        Rule("R", (Atom("p", [Term.fresh("R", "Z", "k")]),), (Atom("q", [X]),))


def test_trigger_on_person():
    rules = parse_rules("@R human(X) -> parentOf(Y,X), human(Y).")
    ts = applicable_triggers(parse_facts("human(alice)."), rules)
    assert len(ts) == 1 and ts[0].pi == {X: const("alice")}


def test_no_triggers_on_empty_factbase():
    assert applicable_triggers(FactBase(), parse_rules("@R p(X) -> q(X).")) == []


def test_three_datalog_triggers_in_rule_order():
    rules = parse_rules("@R1 p(X) -> s(X).\n@R2 q(X) -> s(X).\n@R3 p(X) -> r(X).\n")
    ts = applicable_triggers(parse_facts("p(a). q(a). r(a)."), rules)
    assert [t.rule.id for t in ts] == ["R1", "R2", "R3"]
    assert all(t.pi == {X: a} for t in ts)


def test_immediate_derivation_with_existential():
    rules = parse_rules("@R human(X) -> parentOf(Y,X), human(Y).")
    f = parse_facts("human(alice).")
    (t,) = applicable_triggers(f, rules)
    g = immediate_derivation(f, t)
    assert len(g) == 3
    (y,) = {x for atom in g for x in atom.args if x.kind is Kind.NULL}
    assert Atom("parentOf", [y, const("alice")]) in g and Atom("human", [y]) in g
    assert y.origin[:2] == ("R", "Y")


def test_immediate_derivation_keeps_set_semantics():
    rules = parse_rules("@R p(X,Y) -> p(X,Y).")
    f = parse_facts("p(a,b).")
    (t,) = applicable_triggers(f, rules)
    assert immediate_derivation(f, t) == f


def test_immediate_derivation_symmetric_pair():
    rules = parse_rules("@R p(X,Y) -> p(Y,Z), p(Z,Y).")
    f = parse_facts("p(a,b).")
    (t,) = applicable_triggers(f, rules)
    g = immediate_derivation(f, t)
    z = t.null_for(Z)
    assert g == FactBase([Atom("p", [a, b]), Atom("p", [b, z]), Atom("p", [z, b])])


def test_immediate_derivation_needs_support():
    (r,) = parse_rules("@R p(X) -> q(X).")
    with pytest.raises(SupportNotPresent):
        immediate_derivation(parse_facts("p(b)."), Trigger(r, {X: a}))


def test_skolemize_splits_heads():
    rules = parse_rules("@R p(X,W,Y) -> q(X,Z1), t(Z1,Z2,Y).")
    out = skolemize(rules)
    assert [r.id for r in out] == ["R.1", "R.2"]
    f1 = SkolemTerm("R", "Z1", (X, Y))
    f2 = SkolemTerm("R", "Z2", (X, Y))
    assert out[0].head.args == (X, f1)
    assert out[1].head.args == (f1, f2, Y)


def test_skolemize_single_head_and_datalog():
    rules = parse_rules("@R2 q(Z,X) -> p(X,W).\n@D p(X,Y) -> r(X).\n")
    sk, datalog = skolemize(rules)
    assert sk.id == "R2" and sk.head.args == (X, SkolemTerm("R2", "W", (X,)))
    assert datalog is rules[1]


def test_trigger_identity_and_nulls():
    (r,) = parse_rules("@R p(X,Y) -> q(X,Z).")
    t1, t2 = Trigger(r, {X: a, Y: b}), Trigger(r, {X: a, Y: b})
    t3 = Trigger(r, {X: a, Y: c})
    assert t1 == t2 and t1 != t3 and hash(t1) == hash(t2)
    assert t1.output == t2.output
    assert t1.output != t3.output
    # naming by the frontier gives both triggers the same null
    f1 = Trigger(r, {X: a, Y: b}, naming="frontier")
    f3 = Trigger(r, {X: a, Y: c}, naming="frontier")
    assert f1.output == f3.output
    assert t1.so_class == t3.so_class


def test_trigger_needs_every_body_variable():
    (r,) = parse_rules("@R p(X,Y) -> q(X).")
    with pytest.raises(InvalidRule):
        Trigger(r, {X: a})


def test_max_body_size():
    assert max_body_size(parse_rules("@A p(X) -> q(X).\n@B p(X), q(X) -> r(X).\n")) == 2
    assert max_body_size([]) == 0


# -- properties --------------------------------------------------------------------

RULES = parse_rules(
    "@R1 p(X,Y) -> q(Y,Z).\n"
    "@R2 p(X,Y), p(Y,Z) -> p(X,Z).\n"
    "@R3 q(X,X) -> p(X,a).\n"
    "@R4 p(X,Y), q(Y,W) -> q(X,W).\n"
)
TERMS = [a, b, var("U"), var("V")]
atoms = st.one_of(
    st.builds(lambda s, t: Atom("p", [s, t]), st.sampled_from(TERMS), st.sampled_from(TERMS)),
    st.builds(lambda s, t: Atom("q", [s, t]), st.sampled_from(TERMS), st.sampled_from(TERMS)),
)
factbases = st.frozensets(atoms, max_size=6).map(FactBase)


def brute_triggers(fb: FactBase) -> set[tuple]:
    pool = sorted(fb.terms)
    out = set()
    for r in RULES:
        for image in itertools.product(pool, repeat=len(r.body_vars)):
            pi = dict(zip(r.body_vars, image))
            if all(Atom(x.pred, [pi.get(t, t) for t in x.args]) in fb for x in r.body):
                out.add((r.id, tuple(sorted(pi.items()))))
    return out


@settings(max_examples=200, deadline=None)
@given(factbases)
def test_applicable_triggers_match_brute_force(fb):
    ts = applicable_triggers(fb, RULES)
    assert {(t.rule.id, tuple(sorted(t.pi.items()))) for t in ts} == brute_triggers(fb)
    assert ts == sorted(ts)


@settings(max_examples=100, deadline=None)
@given(factbases, factbases)
def test_triggers_are_monotone(f, g):
    small = set(applicable_triggers(f, RULES))
    big = set(applicable_triggers(FactBase(f.atoms | g.atoms), RULES))
    assert small <= big


@settings(max_examples=100, deadline=None)
@given(factbases, factbases)
def test_output_does_not_depend_on_the_factbase(f, g):
    both = FactBase(f.atoms | g.atoms)
    outputs = {t: t.output for t in applicable_triggers(both, RULES)}
    for t in applicable_triggers(f, RULES):
        assert t.output == outputs[t]
