"""Exhaustive proof search: iterative-deepening shortest proofs and move enumeration."""
from __future__ import annotations

from dataclasses import dataclass

from .expr import Expression, canonical_text, subformulas
from .proof import Problem, ProofState
from .rules import Rule, apply_rule


@dataclass(frozen=True)
class Move:
    rule: str
    premises: tuple[Expression, ...]  # the statements the rule consumed
    conclusion: Expression


@dataclass(frozen=True)
class Proof:
    steps: tuple[Move, ...]

    @property
    def length(self) -> int:
        return len(self.steps)


def addition_pool(problem: Problem) -> tuple[Expression, ...]:
    """Candidate free disjuncts: subformulas already present in the problem."""
    seen: dict[str, Expression] = {}
    for e in problem.premises + (problem.conclusion,):
        for sub in subformulas(e):
            seen.setdefault(canonical_text(sub), sub)
    return tuple(seen[k] for k in sorted(seen))


class ProofSearch:
    """Per-problem search context with memoized move enumeration.

    Search states are frozensets of canonical statement prints; derivations
    only ever add statements, so exploring sets (not sequences) collapses
    permutation-equivalent branches.
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        self.rules: list[Rule] = problem.rules()
        self.pool = addition_pool(problem)
        self.goal_key = canonical_text(problem.conclusion)
        self._moves_cache: dict[frozenset[str], list[Move]] = {}
        self._fail_memo: dict[frozenset[str], int] = {}
        # per-state shortest proofs: key -> (proof or None, deepest depth searched)
        self._proof_cache: dict[frozenset[str], tuple[Proof | None, int]] = {}

    def state_key(self, statements: tuple[Expression, ...]) -> frozenset[str]:
        return frozenset(canonical_text(s) for s in statements)

    def moves(self, statements: tuple[Expression, ...]) -> list[Move]:
        """All applicable derivations yielding a statement not already present.

        Deduplicated by the conclusion's canonical form; deterministic order
        (allowed-rule order, then premise positions, then conclusion text).
        """
        key = self.state_key(statements)
        cached = self._moves_cache.get(key)
        if cached is not None:
            return cached
        present = set(key)
        out: list[Move] = []
        emitted: set[str] = set()
        for rule in self.rules:
            if rule.arity == 1:
                index_tuples = [(i,) for i in range(len(statements))]
            else:
                index_tuples = [
                    (i, j)
                    for i in range(len(statements))
                    for j in range(i + 1, len(statements))
                ]
            for idxs in index_tuples:
                selected = tuple(statements[i] for i in idxs)
                for conclusion in apply_rule(rule, selected, pool=self.pool):
                    ctext = canonical_text(conclusion)
                    if ctext in present or ctext in emitted:
                        continue
                    emitted.add(ctext)
                    out.append(Move(rule.name, selected, conclusion))
        self._moves_cache[key] = out
        return out

    def rules_deriving(self, statements: tuple[Expression, ...], conclusion: Expression) -> list[str]:
        target = canonical_text(conclusion)
        names = []
        for rule in self.rules:
            if rule.arity == 1:
                index_tuples = [(i,) for i in range(len(statements))]
            else:
                index_tuples = [
                    (i, j)
                    for i in range(len(statements))
                    for j in range(i + 1, len(statements))
                ]
            for idxs in index_tuples:
                selected = tuple(statements[i] for i in idxs)
                if any(canonical_text(c) == target for c in apply_rule(rule, selected, pool=self.pool)):
                    names.append(rule.name)
                    break
        return names

    def _dfs(self, statements: tuple[Expression, ...], remaining: int) -> list[Move] | None:
        key = self.state_key(statements)
        if self.goal_key in key:
            return []
        if remaining == 0:
            return None
        if self._fail_memo.get(key, 0) >= remaining:
            return None
        moves = self.moves(statements)
        # finishing moves first: a goal one step away is always optimal
        ordered = sorted(moves, key=lambda m: canonical_text(m.conclusion) != self.goal_key)
        for move in ordered:
            result = self._dfs(statements + (move.conclusion,), remaining - 1)
            if result is not None:
                return [move] + result
        self._fail_memo[key] = remaining
        return None

    def shortest_from(self, statements: tuple[Expression, ...], max_depth: int) -> Proof | None:
        """Minimum-derivation proof from the given statements, or None.

        Results are cached per statement set: a found proof is minimal for any
        depth bound at or above its length; a miss is recorded with the depth
        that was exhausted."""
        key = self.state_key(statements)
        cached = self._proof_cache.get(key)
        if cached is not None:
            proof, searched = cached
            if proof is not None and proof.length <= max_depth:
                return proof
            if proof is not None and proof.length > max_depth:
                return None
            if searched >= max_depth:
                return None
        for depth in range(0, max_depth + 1):
            steps = self._dfs(statements, depth)
            if steps is not None:
                proof = Proof(tuple(steps))
                self._proof_cache[key] = (proof, max_depth)
                return proof
        self._proof_cache[key] = (None, max_depth)
        return None

    def start_proof(self) -> Proof | None:
        """Cached shortest proof from the problem's premises."""
        return self.shortest_from(self.problem.premises, self.problem.optimal_length)

    def main_remainder(self, statements: tuple[Expression, ...]) -> list[Move]:
        """Underived steps of the start proof, in order.

        Derivations are monotone and premises are never deleted, so this
        remainder is always applicable from `statements`; its length bounds
        the true remaining distance from above."""
        proof = self.start_proof()
        if proof is None:
            return []
        present = {canonical_text(s) for s in statements}
        return [m for m in proof.steps if canonical_text(m.conclusion) not in present]

    def all_shortest_rule_sets(self, max_depth: int, proof_cap: int = 20000) -> set[str] | None:
        """Union of rules over every minimum-length proof (for targeted rules).

        For each step of each minimal path, every rule able to derive that
        step's conclusion from the step's statements is included. None when no
        proof exists within max_depth.
        """
        first = self.shortest_from(self.problem.premises, max_depth)
        if first is None:
            return None
        target_len = first.length
        targeted: set[str] = set()
        found = 0
        fail: dict[frozenset[str], int] = {}

        def enumerate_paths(statements: tuple[Expression, ...], remaining: int) -> bool:
            nonlocal found
            key = self.state_key(statements)
            if self.goal_key in key:
                return True
            if remaining == 0 or found >= proof_cap:
                return False
            if fail.get(key, 0) >= remaining:
                return False
            any_hit = False
            for move in self.moves(statements):
                if enumerate_paths(statements + (move.conclusion,), remaining - 1):
                    any_hit = True
                    found += 1
                    targeted.update(self.rules_deriving(statements, move.conclusion))
            if not any_hit:
                fail[key] = remaining
            return any_hit

        enumerate_paths(self.problem.premises, target_len)
        return targeted


_SEARCH_CACHE: dict[tuple[str, tuple[str, ...]], ProofSearch] = {}


def searcher(problem: Problem) -> ProofSearch:
    key = (problem.id, problem.allowed_rules)
    ctx = _SEARCH_CACHE.get(key)
    if ctx is None or ctx.problem is not problem:
        ctx = ProofSearch(problem)
        _SEARCH_CACHE[key] = ctx
    return ctx


def shortest_proof(problem: Problem, max_depth: int, state: ProofState | None = None) -> Proof | None:
    """Minimum-derivation-count proof within max_depth, or None.

    Deterministic given the problem's rule and statement ordering. When
    `state` is given, searches from that state's statements instead of the
    problem premises.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    statements = state.statements if state is not None else problem.premises
    return searcher(problem).shortest_from(tuple(statements), max_depth)


def targeted_rules(problem: Problem, max_depth: int | None = None) -> set[str]:
    """Rules appearing in any minimum-length proof of the problem."""
    depth = max_depth if max_depth is not None else problem.optimal_length
    result = searcher(problem).all_shortest_rule_sets(depth)
    if result is None:
        raise ValueError(f"no proof of {problem.id} within depth {depth}")
    return result


def verify_problem(problem: Problem, slack: int = 0) -> Proof:
    """Load-time check: the conclusion is provable within optimal_length + slack."""
    proof = shortest_proof(problem, problem.optimal_length + slack)
    if proof is None:
        raise ValueError(
            f"problem {problem.id}: no proof within depth {problem.optimal_length + slack}"
        )
    return proof


def find_justification(
    state: ProofState, problem: Problem, conclusion: Expression
) -> tuple[Rule, tuple[int, ...]] | None:
    """A concrete (rule, premise indices) deriving `conclusion` in `state`."""
    target = canonical_text(conclusion)
    ctx = searcher(problem)
    by_text = {}
    for i, stmt in enumerate(state.statements):
        by_text.setdefault(canonical_text(stmt), i)
    # fast path: the cached move list for this statement set
    for move in ctx.moves(tuple(state.statements)):
        if canonical_text(move.conclusion) != target:
            continue
        idxs = []
        used: set[int] = set()
        ok = True
        for premise in move.premises:
            i = by_text.get(canonical_text(premise))
            if i is None or i in used:
                ok = False
                break
            used.add(i)
            idxs.append(i)
        if not ok:
            continue
        rule = next(r for r in ctx.rules if r.name == move.rule)
        from .proof import check_step

        if check_step(state, rule, tuple(idxs), conclusion):
            return rule, tuple(idxs)
    # exhaustive fallback (e.g. when the cached moves skip an already-present
    # conclusion or surface forms differ from the cached tuple)
    for rule in ctx.rules:
        if rule.arity == 1:
            index_tuples = [(i,) for i in range(len(state.statements))]
        else:
            index_tuples = [
                (i, j)
                for i in range(len(state.statements))
                for j in range(i + 1, len(state.statements))
            ]
        for idxs in index_tuples:
            selected = tuple(state.statements[i] for i in idxs)
            for c in apply_rule(rule, selected, pool=ctx.pool):
                if canonical_text(c) == target:
                    return rule, idxs
    return None
