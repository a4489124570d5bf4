
import pytest
from hypothesis import given, strategies as st

from beltamp.props import AbstractBelief, Proposition, prop
from beltamp.symbolic import (ArityMismatchError, DomainSyntaxError, GroundingError,
                              PartialOutcomeError, Problem, PropositionNotInUniverse,
                              TypeMismatchError, UnknownPredicateError, applicable, apply_outcome,
                              bundled_domain_text, bundled_domains, format_domain, ground_schema,
                              parse_domain)
from beltamp.symbolic.syntax import Atom, Literal

PICK = bundled_domain_text("pick")


def atoms(xs):
    return {str(a) for a in xs}


def test_pick_listing_fields():
    s = parse_domain(PICK).schema("pick")
    assert [p for p, _ in s.params] == ["?o", "?g"]
    assert atoms(s.ucond) == {"(BClass ?o @glass)"}
    assert atoms(s.ueff) == {"(Broken ?o)", "(BGrasp ?o ?g)"}
    assert {str(l) for l in s.eff} == {"(not (BVPose ?o))"}
    assert {str(l) for l in s.pre_literals()} == {"(BVPose ?o)", "(BHandFree)"}


def test_empty_clauses():
    d = parse_domain("(:action noop :parameters () :precondition (and) :effects (and))")
    s = d.schema("noop")
    assert s.params == () and s.eff == () and s.ucond == () and s.ueff == ()
    assert s.pre_literals() == frozenset()


def test_push_to_listing():
    s = parse_domain(bundled_domain_text("physical_uncertainty")).schema("push-to")
    assert atoms(s.ucond) == {"(KnownFriction ?o)"}
    assert atoms(s.ueff) == {"(KnownFriction ?o)"}


def test_syntax_error_has_location():
    with pytest.raises(DomainSyntaxError) as e:
        parse_domain("(define (domain x)\n (:action a :parameters ()\n")
    assert e.value.line == 2


@pytest.mark.parametrize("text, err", [
    ("(define (domain x) (:predicates (P)) (:action a :parameters () :precondition (Q)))",
     UnknownPredicateError),
    ("(define (domain x) (:predicates (P ?x - t)) (:action a :parameters () :precondition (P)))",
     ArityMismatchError),
    ("(define (domain x) (:types t u) (:predicates (P ?x - t))"
     " (:action a :parameters (?y - u) :precondition (P ?y)))", TypeMismatchError),
])
def test_semantic_errors_are_distinct(text, err):
    with pytest.raises(err) as e:
        parse_domain(text)
    assert e.value.line >= 1


def test_unknown_predicate_is_named():
    with pytest.raises(UnknownPredicateError, match="Foo"):
        parse_domain("(define (domain x) (:predicates (Bar)) (:action a :parameters () :precondition (Foo)))")


@pytest.mark.parametrize("name", bundled_domains())
def test_round_trip(name):
    d = parse_domain(bundled_domain_text(name))
    again = parse_domain(format_domain(d))
    assert again.schemata == d.schemata
    assert again.goal == d.goal


def _pick_problem(objects, grasps):
    return Problem(parse_domain(PICK), {"object": objects, "grasp": grasps})


def test_grounding_order_and_count():
    s = parse_domain(PICK).schema("pick")
    ops = ground_schema(s, {"object": ["a", "b"], "grasp": ["g1", "g2"]})
    assert [op.args for op in ops] == [("a", "g1"), ("a", "g2"), ("b", "g1"), ("b", "g2")]
    assert len(ground_schema(s, {"object": ["a", "b"], "grasp": ["g1"]})) == 2


def test_constants_join_their_pool():
    p = _pick_problem(["a"], ["g1"])
    assert p.pool("object") == ("a", "glass")


def test_zero_param_schema_grounds_once():
    d = parse_domain("(:action noop :parameters () :precondition (and) :effects (and))")
    assert len(ground_schema(d.schema("noop"), {})) == 1


def test_missing_pool():
    d = parse_domain(PICK)
    with pytest.raises(GroundingError):
        ground_schema(d.schema("pick"), {"object": ["a"]})


@given(st.integers(0, 4), st.integers(0, 4))
def test_grounding_count_is_product(n_obj, n_grasp):
    p = _pick_problem([f"o{i}" for i in range(n_obj)], [f"g{i}" for i in range(n_grasp)])
    assert len(p.operators) == (n_obj + 1) * n_grasp  # plus the @glass constant


SIMPLE = """
(define (domain s)
 (:predicates (P) (Q) (R) (HandFree))
 (:action a :parameters () :precondition (HandFree) :effects (not (P)) :ueffects (Q))
 (:action free :parameters () :precondition (and) :effects (P)))
"""


def test_applicable_cases():
    pr = Problem(parse_domain(SIMPLE), {})
    a, free = pr.operator("a()"), pr.operator("free()")
    assert applicable(a, AbstractBelief([prop("HandFree")]))
    assert not applicable(a, AbstractBelief())
    assert applicable(free, AbstractBelief()) and applicable(free, AbstractBelief([prop("Q")]))


def test_applicable_checks_universe():
    pr = Problem(parse_domain(SIMPLE), {})
    with pytest.raises(PropositionNotInUniverse):
        applicable(pr.operator("a()"), AbstractBelief(), universe=frozenset())


def test_apply_outcome_examples():
    pr = Problem(parse_domain(SIMPLE), {})
    free, a = pr.operator("free()"), pr.operator("a()")
    assert apply_outcome(AbstractBelief(), free, ()) == AbstractBelief([prop("P")])
    b = AbstractBelief([prop("P"), prop("HandFree")])
    assert apply_outcome(b, a, (1,)) == AbstractBelief([prop("Q"), prop("HandFree")])
    assert apply_outcome(b, a, {prop("Q"): 0}) == AbstractBelief([prop("HandFree")])
    with pytest.raises(PartialOutcomeError):
        apply_outcome(b, a, ())


@given(st.sets(st.sampled_from(["P", "Q", "R", "HandFree"])), st.integers(0, 1))
def test_apply_outcome_frame_and_determinism(true, q):
    pr = Problem(parse_domain(SIMPLE), {})
    a = pr.operator("a()")
    b = AbstractBelief(prop(t) for t in true)
    out = apply_outcome(b, a, (q,))
    assert out == apply_outcome(b, a, (q,))
    touched = {prop("P"), prop("Q")}
    for p in pr.universe:
        if p not in touched:
            assert out[p] == b[p]
    assert out[prop("P")] == 0 and out[prop("Q")] == q


def test_oneof_outcomes():
    d = parse_domain("(:action t :parameters () :ueffects (oneof (A) (B) (C)))")
    op = Problem(d, {}).operator("t()")
    assert set(op.outcomes()) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}


def test_maybe_populates_ueff():
    d = parse_domain("(:action t :parameters () :ueffects (maybe (A) (B)))")
    assert atoms(d.schema("t").ueff) == {"(A)", "(B)"}
    assert len(Problem(d, {}).operator("t()").outcomes()) == 4


def test_axioms_are_derived():
    d = parse_domain("""
(:predicates (On) (Lit))
(:axiom Bright :parameters () :condition (and (On) (Lit)))
(:action switch :parameters () :precondition (not (On)) :effects (On))
(:reward (Bright))""")
    pr = Problem(d, {})
    b = apply_outcome(AbstractBelief([prop("Lit")]), pr.operator("switch()"))
    assert prop("Bright") in b and pr.goal_holds(b)


def test_proposition_interning():
    assert Proposition("At", ("x",)) is prop("(At x)")
    assert AbstractBelief([prop("A")]) == AbstractBelief([prop("A")])
    u = (prop("A"), prop("B"))
    assert AbstractBelief.from_bits("01", u).bits(u) == "01"


def test_literal_printing():
    assert str(Literal(Atom("P", ("?x",)), False)) == "(not (P ?x))"
