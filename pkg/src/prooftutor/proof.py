"""Proof states, step checking, state keys, and problem records."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .expr import Expression, canonical_text, normalize, parse_expression, to_text
from .rules import Rule, RuleError, conclusion_matches, get_rule

ORDERED = "ordered"
UNORDERED = "unordered"
SECTIONS = ("introduction", "pretest", "training", "posttest")


class ProofError(ValueError):
    pass


@dataclass(frozen=True)
class Justification:
    rule: str
    premises: tuple[Expression, ...]  # premise expressions at derivation time


@dataclass(frozen=True)
class Problem:
    id: str
    premises: tuple[Expression, ...]
    conclusion: Expression
    allowed_rules: tuple[str, ...]
    section: str
    optimal_length: int

    def __post_init__(self):
        if self.section not in SECTIONS:
            raise ProofError(f"unknown section {self.section!r}")
        if self.optimal_length < 1:
            raise ProofError("optimal_length must be >= 1")
        for name in self.allowed_rules:
            get_rule(name)

    def rules(self) -> list[Rule]:
        return [get_rule(n) for n in self.allowed_rules]

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "premises": [to_text(p) for p in self.premises],
            "conclusion": to_text(self.conclusion),
            "allowed_rules": list(self.allowed_rules),
            "section": self.section,
            "optimal_length": self.optimal_length,
        }

    @staticmethod
    def from_record(record: dict) -> "Problem":
        return Problem(
            id=str(record["id"]),
            premises=tuple(parse_expression(t) for t in record["premises"]),
            conclusion=parse_expression(record["conclusion"]),
            allowed_rules=tuple(record["allowed_rules"]),
            section=record["section"],
            optimal_length=int(record["optimal_length"]),
        )


def load_problems(path: str) -> list[Problem]:
    """One problem per line (JSON records); errors carry line numbers."""
    problems = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                problems.append(Problem.from_record(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise ProofError(f"line {lineno}: {exc}") from exc
    return problems


def write_problems(problems: list[Problem], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in problems:
            fh.write(json.dumps(p.to_record(), sort_keys=True) + "\n")


@dataclass(frozen=True)
class ProofState:
    """Immutable snapshot of one attempt: premises first, then derivations."""

    problem_id: str
    statements: tuple[Expression, ...]
    n_premises: int
    justifications: tuple[Justification | None, ...] = ()

    @staticmethod
    def initial(problem: Problem) -> "ProofState":
        return ProofState(
            problem_id=problem.id,
            statements=problem.premises,
            n_premises=len(problem.premises),
            justifications=(None,) * len(problem.premises),
        )

    def contains(self, e: Expression) -> bool:
        key = normalize(e)
        return any(normalize(s) == key for s in self.statements)

    def derive(self, rule: Rule, premise_indices: tuple[int, ...], derived: Expression) -> "ProofState":
        """Apply a checked derivation; raises ProofError when the step is invalid."""
        verdict = check_step(self, rule, premise_indices, derived)
        if not verdict:
            raise ProofError(f"{rule.name} does not derive {to_text(derived)} from the selected statements")
        if self.contains(derived):
            raise ProofError(f"{to_text(derived)} is already in the proof")
        just = Justification(rule.name, tuple(self.statements[i] for i in premise_indices))
        return replace(
            self,
            statements=self.statements + (derived,),
            justifications=self.justifications + (just,),
        )

    def delete(self, index: int) -> "ProofState":
        if not 0 <= index < len(self.statements):
            raise ProofError(f"statement index {index} out of range")
        if index < self.n_premises:
            raise ProofError("premises cannot be deleted")
        return replace(
            self,
            statements=self.statements[:index] + self.statements[index + 1 :],
            justifications=self.justifications[:index] + self.justifications[index + 1 :],
        )

    def is_complete(self, problem: Problem) -> bool:
        return self.contains(problem.conclusion)


def check_step(
    state: ProofState,
    rule: Rule,
    premise_indices: tuple[int, ...] | list[int],
    derived: Expression,
) -> bool:
    """True iff `derived` follows from the selected statements by `rule`.

    Incorrect applications never mutate state (states are immutable; callers
    only advance on True). Raises ProofError for out-of-range indices and
    RuleError for arity mismatches.
    """
    for i in premise_indices:
        if not 0 <= i < len(state.statements):
            raise ProofError(f"statement index {i} out of range")
    selected = [state.statements[i] for i in premise_indices]
    if len(selected) != rule.arity:
        raise RuleError(f"{rule.name} takes {rule.arity} premise(s), got {len(selected)}")
    return conclusion_matches(rule, selected, derived)


StateKey = str


def canonical_state(state: ProofState, mode: str) -> StateKey:
    """State key under the requested mode.

    ordered: canonical premise prints + surviving derivations in derivation
    order. unordered: lexicographically sorted prints of all statements. With
    no derivations the two coincide.
    """
    premises = sorted(canonical_text(s) for s in state.statements[: state.n_premises])
    derived = [canonical_text(s) for s in state.statements[state.n_premises :]]
    if mode == ORDERED:
        parts = premises + derived
    elif mode == UNORDERED:
        parts = sorted(premises + derived)
    else:
        raise ProofError(f"unknown key mode {mode!r}")
    return f"{state.problem_id}::" + ";".join(parts)


def key_statements(key: StateKey) -> tuple[str, ...]:
    """Canonical statement prints embedded in a state key."""
    _, _, body = key.partition("::")
    return tuple(body.split(";")) if body else ()
