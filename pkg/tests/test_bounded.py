import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catalog import GOLDEN_RULESETS, PQ_CYCLE, TRANSITIVE, TRANSITIVE_SHORTCUT
from oracles import naive_decide, rg_factbases

from kbound.bounded import (
    BoundednessQuery,
    Budget,
    EnumerationSpec,
    decide,
    effective_variant,
    enumerate_factbases,
    policy_for,
    prime_bound,
    single_run_witness,
)
from kbound.chase import replay
from kbound.errors import EmptyRuleset, InvalidQuery
from kbound.homo import canonical_pair
from kbound.kernel import Signature, Term
from kbound.syntax import parse_facts, parse_rules

PQ = parse_rules(PQ_CYCLE)
TR = parse_rules(TRANSITIVE)


def classes(preds, n, mixed, constants=()):
    sig = Signature(dict(preds), frozenset(constants))
    return list(enumerate_factbases(EnumerationSpec(sig, n, constants_only=not mixed)))


# -- enumeration -------------------------------------------------------------------


@pytest.mark.parametrize(
    "preds, n, mixed, count",
    [
        # p(c) | p(c),p(d)
        ({"p": 1}, 2, False, 2),
        # p(c) p(X) | p(c),p(d) p(c),p(X) p(X),p(Y)
        ({"p": 1}, 2, True, 5),
        # p(c,c) p(c,d)
        ({"p": 2}, 1, False, 2),
        # cc cd XX XY cX Xc
        ({"p": 2}, 1, True, 6),
        ({"p": 2}, 2, False, 11),
        ({"p": 2}, 2, True, 58),
        ({"p": 2}, 3, False, 48),
    ],
)
def test_class_counts(preds, n, mixed, count):
    assert len(classes(preds, n, mixed)) == count


@pytest.mark.parametrize(
    "preds, n, mixed, constants",
    [
        ({"p": 2}, 3, False, ()),
        ({"p": 2}, 2, True, ()),
        ({"p": 2, "q": 1}, 2, True, ("a",)),
        ({"p": 3}, 2, False, ("a",)),
        ({"p": 1, "r": 0}, 3, True, ()),
    ],
)
def test_enumeration_covers_every_class_once(preds, n, mixed, constants):
    pinned = frozenset(Term.constant(c) for c in constants)
    ours = [canonical_pair(fb.atoms, pinned)[0] for fb in classes(preds, n, mixed, constants)]
    assert len(ours) == len(set(ours))
    brute = {canonical_pair(fs, pinned)[0] for fs in rg_factbases(preds, n, mixed, sorted(pinned))}
    assert set(ours) == brute


def test_enumeration_grows_by_size_and_keeps_constants():
    fbs = classes({"p": 2}, 3, False, ("a",))
    assert [len(f) for f in fbs] == sorted(len(f) for f in fbs)
    assert any(Term.constant("a") in f.terms for f in fbs)
    assert not any(t.is_variable for f in fbs for t in f.terms)


def test_prime_bound():
    assert prime_bound(PQ, 3) == 1
    assert prime_bound(TR, 2) == 8
    with pytest.raises(EmptyRuleset):
        prime_bound([], 1)


# -- query validation ---------------------------------------------------------------


def test_effective_variant():
    assert effective_variant("so", "all") == "so"
    assert effective_variant("o", "exists") == "bfo"
    assert effective_variant("bfso", "exists") == "bfso"
    for bad in (("r", "exists"), ("bfr", "exists"), ("e", "all"), ("o", "some")):
        with pytest.raises(InvalidQuery):
            effective_variant(*bad)
    with pytest.raises(InvalidQuery):
        policy_for("bfe")


# -- verdicts -------------------------------------------------------------------------


def reaches(v, rules, k):
    d = replay(v.witness_factbase, rules, v.witness_derivation.triggers, policy_for(v.decided_as))
    return d.depth == k + 1


def test_two_rule_cycle():
    assert decide(BoundednessQuery(PQ, "so", 2)).bounded is True
    v = decide(BoundednessQuery(PQ, "so", 1))
    assert v.bounded is False and len(v.witness_factbase) == 1 and reaches(v, PQ, 1)
    assert decide(BoundednessQuery(PQ, "r", 1)).bounded is True
    v = decide(BoundednessQuery(PQ, "o", 5))
    assert v.bounded is False and reaches(v, PQ, 5)


def test_transitivity_is_unbounded_for_breadth_first_oblivious():
    v = decide(BoundednessQuery(TR, "bfo", 2))
    assert v.bounded is False and len(v.witness_factbase) <= 8 and reaches(v, TR, 2)


def test_chain_of_five_is_a_witness():
    chain = parse_facts("p(a0,a1). p(a1,a2). p(a2,a3). p(a3,a4). p(a4,a5).")
    d = single_run_witness(chain, TR, policy_for("bfo"), 2)
    assert d is not None and d.depth == 3
    assert single_run_witness(parse_facts("p(a0,a1). p(a1,a2). p(a2,a3). p(a3,a4)."), TR, policy_for("bfo"), 2) is None


def test_shortcut_rule_bounds_some_derivation():
    sc = parse_rules(TRANSITIVE_SHORTCUT)
    v = decide(BoundednessQuery(sc, "o", 1, "exists"))
    assert v.bounded is True and v.decided_as == "bfo"
    assert decide(BoundednessQuery(sc, "o", 1)).bounded is False


def test_datalog_ruleset_is_bounded_at_its_depth():
    rules = parse_rules("@R1 p(X) -> q(X).\n@R2 q(X) -> r(X).\n")
    assert decide(BoundednessQuery(rules, "r", 2)).bounded is True
    assert decide(BoundednessQuery(rules, "r", 1)).bounded is False
    assert decide(BoundednessQuery(rules, "r", 0)).bounded is False


def test_empty_ruleset_is_bounded():
    v = decide(BoundednessQuery([], "so", 0))
    assert v.bounded is True and v.factbases_checked == 0


def test_budget_exceeded_gives_no_answer():
    v = decide(BoundednessQuery(TR, "r", 2), Budget(max_factbases=3))
    assert v.bounded is None and v.budget_exceeded and v.factbases_checked == 3
    v = decide(BoundednessQuery(TR, "r", 2), Budget(max_derivations=5))
    assert v.bounded is None and v.budget_exceeded


def test_counters_are_reported():
    v = decide(BoundednessQuery(PQ, "r", 1))
    assert v.factbases_checked == len(classes({"p": 2, "q": 2}, 1, True))
    assert v.derivations_explored > 0 and v.elapsed >= 0


def test_single_rule_agrees_with_the_oracle():
    rules = parse_rules("@R p(X,Y) -> p(Y,Z).")
    for variant in ("r", "bfr", "so", "o"):
        for k in (0, 1):
            assert decide(BoundednessQuery(rules, variant, k)).bounded == naive_decide(rules, variant, k)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(sorted(GOLDEN_RULESETS)), st.sampled_from(["o", "bfo", "so", "bfso", "r", "bfr"]), st.integers(0, 1))
def test_golden_rulesets_agree_with_the_oracle(name, variant, k):
    rules = parse_rules(GOLDEN_RULESETS[name])
    v = decide(BoundednessQuery(rules, variant, k))
    assert v.bounded == naive_decide(rules, variant, k)
    if v.bounded is False:
        assert reaches(v, rules, k)
