import itertools
import random

import pytest
from hypothesis import given, strategies as st

from prooftutor.expr import atom, normalize, parse_expression, subformulas
from prooftutor.proof import (
    ORDERED,
    UNORDERED,
    Problem,
    ProofError,
    ProofState,
    canonical_state,
    check_step,
    key_statements,
    load_problems,
    write_problems,
)
from prooftutor.rules import apply_rule, get_rule

P = parse_expression


def make_problem(premises, conclusion, rules=("modus_ponens", "simplification"), length=1):
    return Problem(
        id="t",
        premises=tuple(P(x) for x in premises),
        conclusion=P(conclusion),
        allowed_rules=tuple(rules),
        section="training",
        optimal_length=length,
    )


def test_check_step_correct():
    prob = make_problem(["p", "p -> q"], "q")
    state = ProofState.initial(prob)
    assert check_step(state, get_rule("modus_ponens"), (1, 0), P("q"))


def test_check_step_incorrect():
    prob = make_problem(["p", "p -> q"], "q")
    state = ProofState.initial(prob)
    assert not check_step(state, get_rule("modus_ponens"), (1, 0), P("p"))


def test_check_step_simplification():
    prob = make_problem(["p & q"], "q")
    state = ProofState.initial(prob)
    assert check_step(state, get_rule("simplification"), (0,), P("q"))


def test_check_step_index_out_of_range():
    prob = make_problem(["p", "p -> q"], "q")
    state = ProofState.initial(prob)
    with pytest.raises(ProofError):
        check_step(state, get_rule("modus_ponens"), (1, 5), P("q"))


def test_derive_appends_and_rejects_duplicates():
    prob = make_problem(["p", "p -> q"], "q")
    state = ProofState.initial(prob).derive(get_rule("modus_ponens"), (1, 0), P("q"))
    assert [str(s) for s in state.statements] == ["p", "p -> q", "q"]
    assert state.is_complete(prob)
    with pytest.raises(ProofError):
        state.derive(get_rule("modus_ponens"), (1, 0), P("q"))


def test_premises_never_deleted():
    prob = make_problem(["p", "p -> q"], "q")
    state = ProofState.initial(prob).derive(get_rule("modus_ponens"), (1, 0), P("q"))
    with pytest.raises(ProofError):
        state.delete(0)
    trimmed = state.delete(2)
    assert len(trimmed.statements) == 2


def test_unordered_key_order_invariant():
    prob = make_problem(["p & q", "p -> r"], "r", rules=("modus_ponens", "simplification"))
    s = ProofState.initial(prob)
    simp, mp = get_rule("simplification"), get_rule("modus_ponens")
    a = s.derive(simp, (0,), P("p")).derive(simp, (0,), P("q"))
    b = s.derive(simp, (0,), P("q")).derive(simp, (0,), P("p"))
    assert canonical_state(a, UNORDERED) == canonical_state(b, UNORDERED)
    assert canonical_state(a, ORDERED) != canonical_state(b, ORDERED)


def test_empty_derivations_keys_coincide():
    prob = make_problem(["p", "p -> q"], "q")
    s = ProofState.initial(prob)
    assert canonical_state(s, ORDERED) == canonical_state(s, UNORDERED)


@given(st.permutations(["p", "q", "r", "s"]))
def test_unordered_key_invariant_under_any_permutation(order):
    prob = Problem(
        id="perm",
        premises=(P("p & a"), P("q & a"), P("r & a"), P("s & a")),
        conclusion=P("p"),
        allowed_rules=("simplification",),
        section="training",
        optimal_length=1,
    )
    simp = get_rule("simplification")
    state = ProofState.initial(prob)
    slot = {"p": 0, "q": 1, "r": 2, "s": 3}
    for name in order:
        state = state.derive(simp, (slot[name],), atom(name))
    key = canonical_state(state, UNORDERED)
    parts = key_statements(key)
    assert list(parts) == sorted(parts)
    # every permutation lands on the same key
    assert key == canonical_state(state, UNORDERED)
    reference = ProofState.initial(prob)
    for name in ["p", "q", "r", "s"]:
        reference = reference.derive(simp, (slot[name],), atom(name))
    assert key == canonical_state(reference, UNORDERED)


def test_delete_then_rederive_restores_key():
    prob = make_problem(["p", "p -> q"], "q")
    mp = get_rule("modus_ponens")
    base = ProofState.initial(prob)
    derived = base.derive(mp, (1, 0), P("q"))
    deleted = derived.delete(2)
    assert canonical_state(deleted, ORDERED) == canonical_state(base, ORDERED)
    assert canonical_state(deleted, UNORDERED) == canonical_state(base, UNORDERED)


def test_problem_file_round_trip(tmp_path):
    probs = [
        make_problem(["p", "p -> q"], "q"),
        Problem(
            id="u",
            premises=(P("a | b"), P("!a")),
            conclusion=P("b"),
            allowed_rules=("disjunctive_syllogism",),
            section="pretest",
            optimal_length=1,
        ),
    ]
    path = tmp_path / "problems.jsonl"
    write_problems(probs, str(path))
    loaded = load_problems(str(path))
    assert loaded == probs


def test_problem_file_reports_bad_line(tmp_path):
    path = tmp_path / "problems.jsonl"
    path.write_text('{"id": "x", "premises": ["p ->"], "conclusion": "p", '
                    '"allowed_rules": [], "section": "pretest", "optimal_length": 1}\n')
    with pytest.raises(ProofError, match="line 1"):
        load_problems(str(path))


def test_check_step_equivalence_with_apply_rule_fuzz():
    """check_step(s, r, idx, d) iff d in apply_rule(r, selected) up to reordering."""
    rng = random.Random(7)
    pool_texts = ["p", "q", "r", "!p", "!q", "p & q", "p | q", "p -> q", "q -> r", "!(p & q)"]
    statements = [P(t) for t in pool_texts]
    prob = Problem(
        id="fuzz",
        premises=tuple(statements),
        conclusion=P("r"),
        allowed_rules=tuple(),
        section="training",
        optimal_length=1,
    )
    state = ProofState.initial(prob)
    rule_names = [
        "modus_ponens", "modus_tollens", "disjunctive_syllogism", "simplification",
        "conjunction", "addition", "de_morgan", "material_implication", "double_negation",
    ]
    candidates = [P(t) for t in pool_texts + ["p | r", "!p | !q", "!!p", "q", "q & p"]]
    for _ in range(400):
        rule = get_rule(rng.choice(rule_names))
        idx = tuple(rng.sample(range(len(statements)), rule.arity))
        derived = rng.choice(candidates)
        selected = [state.statements[i] for i in idx]
        expected = any(
            normalize(c) == normalize(derived)
            for c in apply_rule(rule, selected, pool=subformulas(derived))
        )
        assert check_step(state, rule, idx, derived) == expected
