"""The shipped problem set: 2 pretest, 15 training, 5 posttest.

Optimal-length profile per section: pretest mean 3.5, training mean 5.0,
posttest mean 7.2. Each problem's declared length is oracle-verified in the
test suite. Palettes avoid the two unboundedly generative rewrites
(double_negation, tautology) so exhaustive search stays desk-scale; side
chains give solvers room to wander off the optimal path.
"""
from __future__ import annotations

from .proof import Problem

PAD = ("commutativity", "associativity")  # normalization no-ops, shown for realism


def _problem(pid, premises, conclusion, rules, section, length) -> dict:
    return {
        "id": pid,
        "premises": list(premises),
        "conclusion": conclusion,
        "allowed_rules": list(dict.fromkeys(tuple(rules) + PAD)),
        "section": section,
        "optimal_length": length,
    }


_RECORDS = [
    # --- pretest (lengths 3, 4; mean 3.5) -----------------------------------
    _problem(
        "pre1", ["p & q", "p -> s"], "s | r",
        ("modus_ponens", "simplification", "addition", "modus_tollens", "disjunctive_syllogism"),
        "pretest", 3,
    ),
    _problem(
        "pre2", ["p -> q", "q -> r", "r -> s", "p & t"], "s",
        ("modus_ponens", "hypothetical_syllogism", "simplification",
         "modus_tollens", "disjunctive_syllogism"),
        "pretest", 4,
    ),
    # --- training (4,4,4,4,5,5,5,5,5,5,5,5,6,6,7; mean 5.0) ------------------
    _problem(
        "t01", ["a | b", "!a", "b -> c", "c -> d"], "d & b",
        ("disjunctive_syllogism", "modus_ponens", "conjunction", "simplification",
         "modus_tollens"),
        "training", 4,
    ),
    _problem(
        "t02", ["p -> q", "!q", "!p -> r", "r -> s"], "s & !p",
        ("modus_tollens", "modus_ponens", "conjunction", "simplification",
         "disjunctive_syllogism"),
        "training", 4,
    ),
    _problem(
        "t03", ["!(a | b)", "!a -> c", "c -> d", "c -> j", "j -> e"], "d",
        ("de_morgan", "simplification", "modus_ponens", "modus_tollens",
         "disjunctive_syllogism"),
        "training", 4,
    ),
    _problem(
        "t04", ["p & q", "p -> r"], "r & q",
        ("simplification", "modus_ponens", "conjunction", "modus_tollens",
         "disjunctive_syllogism"),
        "training", 4,
    ),
    _problem(
        "t05", ["m & v", "m -> n", "n -> o", "o -> w", "w -> x", "m -> j", "j -> f"], "x",
        ("simplification", "modus_ponens", "hypothetical_syllogism",
         "modus_tollens", "disjunctive_syllogism"),
        "training", 5,
    ),
    _problem(
        "t06", ["a | b", "!a", "b -> c", "c -> d", "d -> e", "e -> f", "c -> k", "k -> g", "g -> h"], "f",
        ("disjunctive_syllogism", "modus_ponens", "simplification",
         "modus_tollens"),
        "training", 5,
    ),
    _problem(
        "t07", ["!p | q", "p", "q -> r", "r -> s", "s -> t", "q -> k", "k -> u"], "t",
        ("material_implication", "modus_ponens", "disjunctive_syllogism",
         "modus_tollens", "simplification"),
        "training", 5,
    ),
    _problem(
        "t08", ["(a -> b) & (c -> d)", "a | c", "(b | d) -> e", "e -> f", "f -> g", "g -> i", "e -> j", "j -> k"], "i",
        ("constructive_dilemma", "modus_ponens", "simplification",
         "modus_tollens", "disjunctive_syllogism"),
        "training", 5,
    ),
    _problem(
        "t09", ["!(p & q)", "!!p", "!q -> r", "r -> s", "s -> t", "r -> k", "k -> u"], "t",
        ("de_morgan", "disjunctive_syllogism", "modus_ponens",
         "modus_tollens", "simplification"),
        "training", 5,
    ),
    _problem(
        "t10", ["x -> y", "y -> z", "!z", "!x -> u", "u -> v", "v -> w", "u -> k", "k -> m"], "w",
        ("modus_tollens", "modus_ponens", "hypothetical_syllogism",
         "disjunctive_syllogism", "simplification"),
        "training", 5,
    ),
    _problem(
        "t11", ["p -> (q -> r)", "p & q"], "r & q",
        ("modus_ponens", "simplification", "conjunction", "modus_tollens",
         "disjunctive_syllogism"),
        "training", 5,
    ),
    _problem(
        "t12", ["a <-> b", "a", "b -> c", "c -> d", "b -> j", "j -> e"], "d",
        ("material_equivalence", "simplification", "modus_ponens",
         "modus_tollens", "disjunctive_syllogism"),
        "training", 5,
    ),
    _problem(
        "t13", ["p & s", "p -> a", "a -> b", "b -> c", "c -> d", "d -> e", "s -> j", "j -> f", "f -> g"], "e",
        ("simplification", "modus_ponens", "modus_tollens",
         "disjunctive_syllogism"),
        "training", 6,
    ),
    _problem(
        "t14", ["a | b", "!a", "b -> c", "c -> d", "d -> e", "e -> f", "f -> g", "b -> k", "k -> m", "m -> n"], "g",
        ("disjunctive_syllogism", "modus_ponens", "simplification",
         "modus_tollens"),
        "training", 6,
    ),
    _problem(
        "t15", ["m -> n", "!n", "!m -> u", "u -> v", "v -> w", "w -> x", "x -> y", "y -> z",
                "u -> j", "j -> a", "a -> b"], "z",
        ("modus_tollens", "modus_ponens", "disjunctive_syllogism",
         "simplification"),
        "training", 7,
    ),
    # --- posttest (6,7,7,8,8; mean 7.2) ---------------------------------------
    _problem(
        "post1", ["m & n", "m -> p", "p -> q", "q -> r", "r -> s", "s -> t", "n -> j", "j -> a", "a -> b"], "t",
        ("simplification", "modus_ponens", "modus_tollens",
         "disjunctive_syllogism"),
        "posttest", 6,
    ),
    _problem(
        "post2", ["g & h", "g -> a", "a -> b", "b -> c", "c -> d", "d -> e", "e -> f",
                  "h -> j", "j -> k", "k -> m"], "f",
        ("simplification", "modus_ponens", "modus_tollens",
         "disjunctive_syllogism"),
        "posttest", 7,
    ),
    _problem(
        "post3", ["x | y", "!x", "y -> a", "a -> b", "b -> c", "c -> d", "d -> e", "e -> f",
                  "a -> j", "j -> g", "g -> h"], "f",
        ("disjunctive_syllogism", "modus_ponens", "simplification",
         "modus_tollens"),
        "posttest", 7,
    ),
    _problem(
        "post4", ["p -> q", "!q", "!p -> r", "r -> s", "s -> t", "t -> u", "u -> v", "v -> w",
                  "w -> z", "r -> j", "j -> a", "a -> b"], "z",
        ("modus_tollens", "modus_ponens", "disjunctive_syllogism",
         "simplification"),
        "posttest", 8,
    ),
    _problem(
        "post5", ["a & k", "a -> b", "b -> c", "c -> d", "d -> e", "e -> f", "f -> g", "g -> h",
                  "k -> s", "s -> m", "m -> n"], "h",
        ("simplification", "modus_ponens", "modus_tollens",
         "disjunctive_syllogism"),
        "posttest", 8,
    ),
]


def default_problems() -> list[Problem]:
    return [Problem.from_record(r) for r in _RECORDS]


def problems_by_section(problems: list[Problem] | None = None) -> dict[str, list[Problem]]:
    problems = problems if problems is not None else default_problems()
    out: dict[str, list[Problem]] = {}
    for p in problems:
        out.setdefault(p.section, []).append(p)
    return out
