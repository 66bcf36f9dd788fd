"""Next-step hint selection with a search fallback guaranteeing availability."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .expr import Expression, canonical_text, normalize, parse_expression
from .network import InteractionNetwork
from .proof import UNORDERED, Problem, ProofState, canonical_state
from .search import find_justification, searcher, shortest_proof

NETWORK = "network"
SEARCH_FALLBACK = "search_fallback"
PROACTIVE = "proactive"
ON_DEMAND = "on_demand"

FALLBACK_DEPTH_SLACK = 3


class UnsolvableStateError(RuntimeError):
    """The current state admits no proof within the fallback depth bound."""


@dataclass(frozen=True)
class Hint:
    statement: Expression
    source: str  # network | search_fallback
    agency: str  # proactive | on_demand
    justified: bool = False
    issued_at_step: int = 0

    @property
    def statement_text(self) -> str:
        return canonical_text(self.statement)


def _derivable_one_step(state: ProofState, problem: Problem, statement: Expression) -> bool:
    return find_justification(state, problem, statement) is not None


def _implied_remaining(net: InteractionNetwork, value: float) -> float:
    """Steps to goal implied by a max-backup value (exact for that backup)."""
    import math

    params = net.params
    if params is None:
        return float("inf")
    floor = params.step_reward / (1.0 - params.discount)
    top = params.goal_reward - floor
    if value <= floor or top <= 0:
        return float("inf")
    return math.log((value - floor) / top, params.discount)


def _network_candidate(
    net: InteractionNetwork, state: ProofState, problem: Problem, budget: float
) -> Expression | None:
    """Best derive-successor by value, ties broken by smallest statement text.

    Ranking uses the max-backup hint values when present (they measure the
    best observed completion and are immune to the thin-traffic selection bias
    of the expected backup). A candidate whose implied completion would exceed
    `budget` steps is rejected, so the search fallback (exactly optimal from
    any state) keeps hint chains inside the availability bound.
    """
    node = net.nodes.get(canonical_state(state, UNORDERED))
    if node is None:
        return None
    key = node.key
    candidates: list[tuple[float, str, bool]] = []
    for succ in net.successors.get(key, ()):
        edge = net.edges[(key, succ)]
        succ_node = net.nodes[succ]
        if edge.kind != "derive" or not edge.statement or not succ_node.goal_reachable:
            continue
        budgeted = True
        if succ_node.hint_value is not None:
            rank = succ_node.hint_value
            budgeted = _implied_remaining(net, rank) + 1.0 <= budget + 1e-6
        else:
            rank = succ_node.value
        candidates.append((rank, edge.statement, budgeted))
    # highest value first; lexicographically smallest statement on ties
    for _, statement_text, budgeted in sorted(candidates, key=lambda c: (-c[0], c[1])):
        if not budgeted:
            continue
        statement = parse_expression(statement_text)
        if state.contains(statement):
            continue
        if _derivable_one_step(state, problem, statement):
            return statement
    return None


def next_step_hint(
    net: InteractionNetwork | None,
    state: ProofState,
    problem: Problem,
    agency: str = ON_DEMAND,
    issued_at_step: int = 0,
) -> Hint:
    """A one-rule-application hint toward the goal; always available for
    solvable states.

    Prefers the matched network node's best goal-reaching derive successor
    whose observed completion fits the remaining-length budget (bounded above
    by the start proof's underived remainder, which is always applicable
    because derivations are monotone and premises are never deleted);
    otherwise falls back to exhaustive search from the state, bounded by
    optimal_length + 3.
    """
    remainder = searcher(problem).main_remainder(tuple(state.statements))
    if net is not None and remainder:
        statement = _network_candidate(net, state, problem, budget=len(remainder) + 2.0)
        if statement is not None:
            return Hint(statement, NETWORK, agency, issued_at_step=issued_at_step)
    proof = shortest_proof(problem, problem.optimal_length + FALLBACK_DEPTH_SLACK, state=state)
    if proof is None or proof.length == 0:
        if state.is_complete(problem):
            raise UnsolvableStateError("state already contains the conclusion")
        raise UnsolvableStateError(
            f"no proof from this state within depth {problem.optimal_length + FALLBACK_DEPTH_SLACK}"
        )
    return Hint(proof.steps[0].conclusion, SEARCH_FALLBACK, agency, issued_at_step=issued_at_step)


def record_justification(hint: Hint, derived: Expression, correct: bool) -> Hint:
    """Marks the hint justified iff the step correctly derives its statement."""
    if correct and normalize(derived) == normalize(hint.statement):
        return replace(hint, justified=True)
    return hint


def justify_most_recent(
    pending: list[Hint], derived: Expression, correct: bool
) -> tuple[list[Hint], Hint | None]:
    """A derive step justifies at most the most recent unjustified matching hint.

    Returns the updated pending list (justified hint removed) and the
    justified hint, or None.
    """
    if not correct:
        return pending, None
    target = normalize(derived)
    for i in range(len(pending) - 1, -1, -1):
        hint = pending[i]
        if not hint.justified and normalize(hint.statement) == target:
            justified = replace(hint, justified=True)
            return pending[:i] + pending[i + 1 :], justified
    return pending, None
