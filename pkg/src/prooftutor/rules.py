"""Inference and replacement rules over propositional expressions.

Patterns are expressions whose uppercase atoms are metavariables. Inference
rules list premise-schema variants with one conclusion schema; replacement
rules list equivalence pairs rewritten in both directions at any subformula
position. Premise selection is order-insensitive (both orders are tried for
two-premise rules).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .expr import (
    AND,
    ATOM,
    IFF,
    IMPLIES,
    NOT,
    OR,
    Expression,
    atom,
    normalize,
    subformulas,
)

Bindings = dict[str, Expression]


def _is_metavar(e: Expression) -> bool:
    return e.op == ATOM and e.name.isupper()


def match(pattern: Expression, target: Expression, bindings: Bindings | None = None) -> Bindings | None:
    """Structural match of `target` against `pattern`; None if it fails."""
    if bindings is None:
        bindings = {}
    if _is_metavar(pattern):
        bound = bindings.get(pattern.name)
        if bound is None:
            out = dict(bindings)
            out[pattern.name] = target
            return out
        return bindings if bound == target else None
    if pattern.op != target.op or len(pattern.args) != len(target.args):
        return None
    if pattern.op == ATOM:
        return bindings if pattern.name == target.name else None
    for p_arg, t_arg in zip(pattern.args, target.args):
        bindings = match(p_arg, t_arg, bindings)
        if bindings is None:
            return None
    return bindings


def instantiate(pattern: Expression, bindings: Bindings) -> Expression:
    if _is_metavar(pattern):
        return bindings[pattern.name]
    if pattern.op == ATOM:
        return pattern
    return Expression(pattern.op, tuple(instantiate(a, bindings) for a in pattern.args))


def _free_metavars(pattern: Expression) -> tuple[str, ...]:
    out: set[str] = set()

    def walk(e: Expression) -> None:
        if _is_metavar(e):
            out.add(e.name)
        for a in e.args:
            walk(a)

    walk(pattern)
    return tuple(sorted(out))


@dataclass(frozen=True)
class RuleVariant:
    premises: tuple[Expression, ...]
    conclusion: Expression
    free_vars: tuple[str, ...]  # conclusion metavariables unbound by the premises


@dataclass(frozen=True)
class Rule:
    name: str
    kind: str  # "inference" | "replacement"
    arity: int
    variants: tuple[RuleVariant, ...] = ()
    # replacement: bidirectional equivalence pairs
    equations: tuple[tuple[Expression, Expression], ...] = ()

    def __str__(self) -> str:
        return self.name


class RuleError(ValueError):
    pass


def _rewrite_positions(e: Expression, lhs: Expression, rhs: Expression) -> list[Expression]:
    """All results of rewriting one occurrence of lhs to rhs anywhere in e."""
    results: list[Expression] = []
    bindings = match(lhs, e)
    if bindings is not None:
        results.append(instantiate(rhs, bindings))
    for i, child in enumerate(e.args):
        for rewritten in _rewrite_positions(child, lhs, rhs):
            new_args = e.args[:i] + (rewritten,) + e.args[i + 1 :]
            results.append(Expression(e.op, new_args))
    return results


def apply_rule(
    rule: Rule,
    premises: list[Expression] | tuple[Expression, ...],
    pool: tuple[Expression, ...] = (),
) -> list[Expression]:
    """All conclusions the rule derives from the given premises.

    `pool` supplies candidate instantiations for conclusion-only metavariables
    (only Addition has one). Results are deduplicated on surface form; premise
    order is ignored for two-premise rules. Raises RuleError on arity mismatch.
    """
    if len(premises) != rule.arity:
        raise RuleError(f"{rule.name} takes {rule.arity} premise(s), got {len(premises)}")
    results: list[Expression] = []
    seen: set[Expression] = set()

    def emit(e: Expression) -> None:
        if e not in seen:
            seen.add(e)
            results.append(e)

    if rule.kind == "replacement":
        for lhs, rhs in rule.equations:
            for a, b in ((lhs, rhs), (rhs, lhs)):
                for rewritten in _rewrite_positions(premises[0], a, b):
                    emit(rewritten)
        return results

    orders = list(permutations(range(rule.arity)))
    for variant in rule.variants:
        for order in orders:
            bindings: Bindings | None = {}
            for pattern, idx in zip(variant.premises, order):
                bindings = match(pattern, premises[idx], bindings)
                if bindings is None:
                    break
            if bindings is None:
                continue
            if not variant.free_vars:
                emit(instantiate(variant.conclusion, bindings))
                continue
            for candidate in pool:
                full = dict(bindings)
                for v in variant.free_vars:
                    full[v] = candidate
                emit(instantiate(variant.conclusion, full))
    return results


def conclusion_matches(rule: Rule, premises: list[Expression] | tuple[Expression, ...], derived: Expression) -> bool:
    """True iff `derived` is (up to and/or reordering) a conclusion of the rule.

    Conclusion-only metavariables are instantiated from subformulas of
    `derived`, which covers every way the free disjunct could have been chosen.
    """
    target = normalize(derived)
    for candidate in apply_rule(rule, premises, pool=subformulas(derived)):
        if normalize(candidate) == target:
            return True
    return False


A, B, C, D, Q = (atom(n) for n in "ABCDQ")


def _and(x: Expression, y: Expression) -> Expression:
    return Expression(AND, (x, y))


def _or(x: Expression, y: Expression) -> Expression:
    return Expression(OR, (x, y))


def _imp(x: Expression, y: Expression) -> Expression:
    return Expression(IMPLIES, (x, y))


def _iff(x: Expression, y: Expression) -> Expression:
    return Expression(IFF, (x, y))


def _not(x: Expression) -> Expression:
    return Expression(NOT, (x,))


def _inference(name: str, arity: int, *variants: tuple[tuple[Expression, ...], Expression]) -> Rule:
    built = []
    for premises, conclusion in variants:
        bound = {v for p in premises for v in _free_metavars(p)}
        free = tuple(v for v in _free_metavars(conclusion) if v not in bound)
        built.append(RuleVariant(premises=premises, conclusion=conclusion, free_vars=free))
    return Rule(name=name, kind="inference", arity=arity, variants=tuple(built))


def _replacement(name: str, *equations: tuple[Expression, Expression]) -> Rule:
    return Rule(name=name, kind="replacement", arity=1, equations=tuple(equations))


RULES: dict[str, Rule] = {
    r.name: r
    for r in (
        _inference("modus_ponens", 2, ((_imp(A, B), A), B)),
        _inference("modus_tollens", 2, ((_imp(A, B), _not(B)), _not(A))),
        _inference(
            "disjunctive_syllogism",
            2,
            ((_or(A, B), _not(A)), B),
            ((_or(A, B), _not(B)), A),
        ),
        _inference("hypothetical_syllogism", 2, ((_imp(A, B), _imp(B, C)), _imp(A, C))),
        _inference("simplification", 1, ((_and(A, B),), A), ((_and(A, B),), B)),
        _inference("conjunction", 2, ((A, B), _and(A, B))),
        _inference("addition", 1, ((A,), _or(A, Q))),
        _inference(
            "constructive_dilemma",
            2,
            ((_and(_imp(A, B), _imp(C, D)), _or(A, C)), _or(B, D)),
        ),
        _replacement("double_negation", (A, _not(_not(A)))),
        _replacement(
            "de_morgan",
            (_not(_and(A, B)), _or(_not(A), _not(B))),
            (_not(_or(A, B)), _and(_not(A), _not(B))),
        ),
        _replacement("commutativity", (_and(A, B), _and(B, A)), (_or(A, B), _or(B, A))),
        _replacement(
            "associativity",
            (_and(_and(A, B), C), _and(A, _and(B, C))),
            (_or(_or(A, B), C), _or(A, _or(B, C))),
        ),
        _replacement(
            "distribution",
            (_and(A, _or(B, C)), _or(_and(A, B), _and(A, C))),
            (_or(A, _and(B, C)), _and(_or(A, B), _or(A, C))),
        ),
        _replacement("transposition", (_imp(A, B), _imp(_not(B), _not(A)))),
        _replacement("material_implication", (_imp(A, B), _or(_not(A), B))),
        _replacement(
            "material_equivalence",
            (_iff(A, B), _and(_imp(A, B), _imp(B, A))),
            (_iff(A, B), _or(_and(A, B), _and(_not(A), _not(B)))),
        ),
        _replacement("exportation", (_imp(_and(A, B), C), _imp(A, _imp(B, C)))),
        _replacement("tautology", (A, _and(A, A)), (A, _or(A, A))),
    )
}

RULE_ORDER: tuple[str, ...] = tuple(RULES)

INFERENCE_RULES: tuple[str, ...] = tuple(n for n, r in RULES.items() if r.kind == "inference")
REPLACEMENT_RULES: tuple[str, ...] = tuple(n for n, r in RULES.items() if r.kind == "replacement")


def get_rule(name: str) -> Rule:
    try:
        return RULES[name]
    except KeyError:
        raise RuleError(f"unknown rule {name!r}") from None
