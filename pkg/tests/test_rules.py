"""Rule-palette behavior plus the exhaustive truth-table soundness check."""
import pytest

from prooftutor.expr import atom, entails, normalize, parse_expression, subformulas
from prooftutor.rules import (
    INFERENCE_RULES,
    REPLACEMENT_RULES,
    RULES,
    RuleError,
    apply_rule,
    conclusion_matches,
    get_rule,
)

P = parse_expression
p, q, r = atom("p"), atom("q"), atom("r")


def norms(exprs):
    return {normalize(e) for e in exprs}


def test_palette_size_and_kinds():
    assert len(RULES) == 18
    assert len(INFERENCE_RULES) == 8
    assert len(REPLACEMENT_RULES) == 10
    assert all(RULES[n].arity in (1, 2) for n in RULES)


def test_modus_ponens():
    assert apply_rule(get_rule("modus_ponens"), [P("p -> q"), p]) == [q]
    assert apply_rule(get_rule("modus_ponens"), [p, P("p -> q")]) == [q]  # order-insensitive
    assert apply_rule(get_rule("modus_ponens"), [P("p -> q"), r]) == []


def test_simplification_yields_both_conjuncts():
    assert norms(apply_rule(get_rule("simplification"), [P("p & q")])) == norms([p, q])


def test_modus_tollens():
    assert norms(apply_rule(get_rule("modus_tollens"), [P("p -> q"), P("!q")])) == norms([P("!p")])


def test_disjunctive_syllogism_both_sides():
    ds = get_rule("disjunctive_syllogism")
    assert norms(apply_rule(ds, [P("p | q"), P("!p")])) == norms([q])
    assert norms(apply_rule(ds, [P("p | q"), P("!q")])) == norms([p])


def test_hypothetical_syllogism():
    hs = get_rule("hypothetical_syllogism")
    assert norms(apply_rule(hs, [P("p -> q"), P("q -> r")])) == norms([P("p -> r")])


def test_conjunction():
    assert norms(apply_rule(get_rule("conjunction"), [p, q])) == norms([P("p & q"), P("q & p")])


def test_addition_uses_pool():
    add = get_rule("addition")
    assert apply_rule(add, [p]) == []  # no candidates supplied
    assert norms(apply_rule(add, [p], pool=(q,))) == norms([P("p | q")])


def test_constructive_dilemma():
    cd = get_rule("constructive_dilemma")
    out = apply_rule(cd, [P("(p -> q) & (r -> s)"), P("p | r")])
    assert norms(out) == norms([P("q | s")])


def test_double_negation_all_positions():
    dn = get_rule("double_negation")
    out = norms(apply_rule(dn, [P("p & q")]))
    assert normalize(P("!!(p & q)")) in out
    assert normalize(P("!!p & q")) in out
    assert normalize(P("p & !!q")) in out
    assert norms(apply_rule(dn, [P("!!p")])) >= norms([p])


def test_de_morgan():
    dm = get_rule("de_morgan")
    assert normalize(P("!p | !q")) in norms(apply_rule(dm, [P("!(p & q)")]))
    assert normalize(P("!(p | q)")) in norms(apply_rule(dm, [P("!p & !q")]))


def test_material_implication_both_directions():
    mi = get_rule("material_implication")
    assert normalize(P("!p | q")) in norms(apply_rule(mi, [P("p -> q")]))
    assert normalize(P("p -> q")) in norms(apply_rule(mi, [P("!p | q")]))


def test_arity_mismatch():
    with pytest.raises(RuleError):
        apply_rule(get_rule("modus_ponens"), [p])


def test_conclusion_matches_handles_reordered_disjuncts():
    add = get_rule("addition")
    assert conclusion_matches(add, [p], P("p | q"))
    assert conclusion_matches(add, [p], P("q | p"))
    assert not conclusion_matches(add, [p], P("q | r"))


def _formula_pool():
    """Premise instantiations over <= 3 variables exercising every pattern shape."""
    texts = [
        "p", "q", "r",
        "!p", "!q", "!r", "!!p", "!!q",
        "p & q", "q & r", "p & r", "q & p", "p & p",
        "p | q", "q | r", "p | r", "q | p", "p | p",
        "p -> q", "q -> r", "p -> r", "q -> p", "r -> p",
        "p <-> q", "q <-> r",
        "!(p & q)", "!(p | q)", "!p & !q", "!p | !q", "!p | q",
        "(p & q) & r", "p & (q & r)", "(p | q) | r", "p | (q & r)",
        "p & (q | r)", "(p & q) | (p & r)", "(p | q) & (p | r)",
        "(p -> q) & (q -> r)", "(p -> q) & (r -> q)",
        "(p & q) -> r", "p -> (q -> r)", "!q -> !p",
        "(p & q) | (!p & !q)", "(p -> q) & (q -> p)",
    ]
    return [P(t) for t in texts]


def test_every_rule_sound_by_truth_table():
    """Every conclusion of every rule is entailed by its premises: zero exceptions."""
    pool = _formula_pool()
    extra = (p, q, r)
    checked = 0
    for name in RULES:
        rule = RULES[name]
        if rule.arity == 1:
            premise_tuples = [(a,) for a in pool]
        else:
            premise_tuples = [(a, b) for a in pool for b in pool]
        for premises in premise_tuples:
            for conclusion in apply_rule(rule, list(premises), pool=extra):
                checked += 1
                assert entails(premises, conclusion), (
                    f"{name}: {[str(x) for x in premises]} |- {conclusion} is unsound"
                )
    assert checked > 3000


def test_replacement_rules_are_equivalences():
    """Replacement rewrites preserve the truth table of the whole formula."""
    from prooftutor.expr import tautologically_equivalent

    pool = _formula_pool()
    for name in REPLACEMENT_RULES:
        rule = RULES[name]
        for formula in pool:
            for rewritten in apply_rule(rule, [formula]):
                assert tautologically_equivalent(formula, rewritten), (
                    f"{name}: {formula} vs {rewritten}"
                )
