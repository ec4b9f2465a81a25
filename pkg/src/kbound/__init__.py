"""Chase variants, breadth-first derivations and k-boundedness of existential rules."""

from .bounded import (
    Budget,
    BoundednessQuery,
    EnumerationSpec,
    Verdict,
    decide,
    enumerate_factbases,
    prime_bound,
)
from .chase import (
    ChaseOutcome,
    Derivation,
    Status,
    Variant,
    VariantPolicy,
    ancestors,
    check_ancestry_preservation,
    enumerate_derivations,
    extend,
    is_applicable,
    is_breadth_first,
    is_rank_compatible,
    is_terminating,
    prime_ancestors,
    replay,
    restrict,
    run,
    to_rank_compatible,
)
from .homo import (
    canonical_form,
    canonical_representative,
    core_of,
    exists_homomorphism,
    exists_retraction,
    find_homomorphisms,
    quasi_isomorphic,
)
from .kernel import Atom, FactBase, Signature, Substitution, Term, apply_substitution, const, make_atom, term_inventory, var
from .rules import Rule, Trigger, applicable_triggers, immediate_derivation, skolemize
from .syntax import format_facts, format_rules, parse_facts, parse_rules

__version__ = "0.1.0"
