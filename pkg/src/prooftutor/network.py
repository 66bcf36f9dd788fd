"""Per-problem interaction networks: counts, value iteration, quality scales."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .corpus import StepRecord
from .expr import canonical_text
from .proof import ORDERED, UNORDERED, Problem, ProofState, canonical_state, key_statements

import numpy as np


class NetworkError(ValueError):
    pass


@dataclass
class ValueIterationParams:
    goal_reward: float = 100.0
    deadend_penalty: float = -100.0
    step_reward: float = -1.0
    discount: float = 0.9
    epsilon: float = 1e-6
    max_iterations: int = 1000
    backup: str = "expected"  # expected | max (ablation switch)

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise NetworkError("discount must be in (0, 1)")
        if self.epsilon <= 0:
            raise NetworkError("epsilon must be positive")
        if self.backup not in ("expected", "max"):
            raise NetworkError(f"unknown backup {self.backup!r}")

    def to_dict(self) -> dict:
        return {
            "goal_reward": self.goal_reward,
            "deadend_penalty": self.deadend_penalty,
            "step_reward": self.step_reward,
            "discount": self.discount,
            "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "backup": self.backup,
        }


@dataclass
class NodeStats:
    key: str
    visits: int = 0
    value: float = 0.0
    global_quality: float = 0.0
    local_quality: float = 0.0
    is_goal: bool = False
    is_deadend: bool = False
    goal_reachable: bool = False
    # max-backup value used for hint ranking (optimistic distance to goal,
    # free of the selection bias thin-traffic states carry under the
    # expected backup); None until assign_hint_values runs
    hint_value: float | None = None


@dataclass
class EdgeStats:
    count: int = 0
    kind: str = "derive"  # derive | delete
    statement: str = ""  # canonical print of the added (derive) or removed (delete) statement


@dataclass
class ConvergenceReport:
    iterations: int
    residual: float
    converged: bool


class InteractionNetwork:
    """Graph of observed states for one problem under one key mode."""

    def __init__(self, problem_id: str, key_mode: str, start_key: str):
        self.problem_id = problem_id
        self.key_mode = key_mode
        self.start_key = start_key
        self.nodes: dict[str, NodeStats] = {}
        self.edges: dict[tuple[str, str], EdgeStats] = {}
        self.successors: dict[str, list[str]] = {}
        self.predecessors: dict[str, list[str]] = {}
        self.params: ValueIterationParams | None = None
        self.convergence: ConvergenceReport | None = None

    def node(self, key: str) -> NodeStats:
        stats = self.nodes.get(key)
        if stats is None:
            stats = NodeStats(key=key)
            self.nodes[key] = stats
            self.successors[key] = []
            self.predecessors[key] = []
        return stats

    def add_edge(self, pre: str, post: str, kind: str, statement: str) -> None:
        edge = self.edges.get((pre, post))
        if edge is None:
            self.edges[(pre, post)] = EdgeStats(count=1, kind=kind, statement=statement)
            self.successors[pre].append(post)
            self.predecessors[post].append(pre)
        else:
            edge.count += 1

    def out_counts(self, key: str) -> int:
        return sum(self.edges[(key, s)].count for s in self.successors.get(key, ()))

    def transition_probability(self, pre: str, post: str) -> float:
        total = self.out_counts(pre)
        if total == 0:
            return 0.0
        return self.edges[(pre, post)].count / total


def _contains_conclusion(key: str, conclusion_text: str) -> bool:
    return conclusion_text in key_statements(key)


def build_network(steps: list[StepRecord], problem: Problem, key_mode: str) -> InteractionNetwork:
    """Counts observed states and transitions; order of the input is immaterial.

    Raises NetworkError when the corpus holds no steps for the problem.
    """
    if key_mode not in (ORDERED, UNORDERED):
        raise NetworkError(f"unknown key mode {key_mode!r}")
    relevant = [s for s in steps if s.problem == problem.id]
    if not relevant:
        raise NetworkError(f"no corpus steps for problem {problem.id}")
    start_key = canonical_state(ProofState.initial(problem), key_mode)
    net = InteractionNetwork(problem.id, key_mode, start_key)
    net.node(start_key)
    conclusion_text = canonical_text(problem.conclusion)

    def keys_of(step: StepRecord) -> tuple[str, str]:
        if key_mode == ORDERED:
            return step.pre_key_ordered, step.post_key_ordered
        return step.pre_key_unordered, step.post_key_unordered

    # visits: one per state occurrence along each trace (start counted per trace)
    by_trace: dict[tuple[str, str], list[StepRecord]] = {}
    for step in relevant:
        by_trace.setdefault((step.student, step.problem), []).append(step)
    for trace_key in sorted(by_trace):
        trace = sorted(by_trace[trace_key], key=lambda s: s.index)
        net.node(start_key).visits += 1
        for step in trace:
            pre, post = keys_of(step)
            net.node(pre)
            net.node(post).visits += 1
            if key_mode == ORDERED:
                pre_set = set(key_statements(step.pre_key_unordered))
                post_set = set(key_statements(step.post_key_unordered))
            else:
                pre_set = set(key_statements(pre))
                post_set = set(key_statements(post))
            if step.kind == "derive":
                added = post_set - pre_set
                statement = next(iter(added)) if added else ""
            else:
                removed = pre_set - post_set
                statement = next(iter(removed)) if removed else ""
            net.add_edge(pre, post, step.kind, statement)

    for key, stats in net.nodes.items():
        stats.is_goal = _contains_conclusion(key, conclusion_text)
    for key, stats in net.nodes.items():
        stats.is_deadend = (not stats.is_goal) and not net.successors.get(key)

    _mark_goal_reachable(net)
    _check_reachability(net)
    return net


def _mark_goal_reachable(net: InteractionNetwork) -> None:
    frontier = [k for k, n in net.nodes.items() if n.is_goal]
    seen = set(frontier)
    while frontier:
        key = frontier.pop()
        net.nodes[key].goal_reachable = True
        for pred in net.predecessors.get(key, ()):
            if pred not in seen:
                seen.add(pred)
                frontier.append(pred)


def _check_reachability(net: InteractionNetwork) -> None:
    seen = {net.start_key}
    frontier = [net.start_key]
    while frontier:
        key = frontier.pop()
        for succ in net.successors.get(key, ()):
            if succ not in seen:
                seen.add(succ)
                frontier.append(succ)
    unreachable = sorted(set(net.nodes) - seen)
    if unreachable:
        raise NetworkError(f"states not reachable from start: {unreachable[:3]}")


def _iterate_values(
    net: InteractionNetwork, params: ValueIterationParams
) -> tuple[dict[str, float], ConvergenceReport]:
    keys = sorted(net.nodes)
    index = {k: i for i, k in enumerate(keys)}
    n = len(keys)
    values = np.zeros(n)
    terminal = np.zeros(n, dtype=bool)
    for k in keys:
        node = net.nodes[k]
        i = index[k]
        if node.is_goal:
            values[i] = params.goal_reward
            terminal[i] = True
        elif node.is_deadend:
            values[i] = params.deadend_penalty
            terminal[i] = True

    rows: list[int] = []
    cols: list[int] = []
    probs: list[float] = []
    for k in keys:
        i = index[k]
        if terminal[i]:
            continue
        for succ in net.successors.get(k, ()):
            rows.append(i)
            cols.append(index[succ])
            probs.append(net.transition_probability(k, succ))
    rows_a = np.array(rows, dtype=int)
    cols_a = np.array(cols, dtype=int)
    probs_a = np.array(probs)

    iterations = 0
    residual = 0.0
    converged = True
    if not terminal.all():
        converged = False
        for iterations in range(1, params.max_iterations + 1):
            if params.backup == "expected":
                expected = np.zeros(n)
                np.add.at(expected, rows_a, probs_a * values[cols_a])
            else:
                expected = np.full(n, -np.inf)
                np.maximum.at(expected, rows_a, values[cols_a])
                expected[expected == -np.inf] = 0.0
            new_values = np.where(terminal, values, params.step_reward + params.discount * expected)
            residual = float(np.max(np.abs(new_values - values)))
            values = new_values
            if residual < params.epsilon:
                converged = True
                break
    value_map = {k: float(values[index[k]]) for k in keys}
    return value_map, ConvergenceReport(iterations, residual, converged)


def value_iterate(net: InteractionNetwork, params: ValueIterationParams | None = None) -> ConvergenceReport:
    """Fixed-point sweep: terminals pinned, non-terminals backed up until
    max |delta V| < epsilon or max_iterations. Values remain usable either way."""
    params = params or ValueIterationParams()
    value_map, report = _iterate_values(net, params)
    for k, value in value_map.items():
        net.nodes[k].value = value
    net.params = params
    net.convergence = report
    _assign_qualities(net)
    return net.convergence


def assign_hint_values(net: InteractionNetwork, params: ValueIterationParams | None = None) -> None:
    """Max-backup values for hint ranking (best observed completion per state)."""
    base = params or net.params or ValueIterationParams()
    max_params = ValueIterationParams(
        goal_reward=base.goal_reward,
        deadend_penalty=base.deadend_penalty,
        step_reward=base.step_reward,
        discount=base.discount,
        epsilon=base.epsilon,
        max_iterations=base.max_iterations,
        backup="max",
    )
    value_map, _ = _iterate_values(net, max_params)
    for k, value in value_map.items():
        net.nodes[k].hint_value = value


def _rescale(value: float, low: float, high: float) -> float:
    if high <= low:
        return 100.0
    return (value - low) / (high - low) * 100.0


def _assign_qualities(net: InteractionNetwork) -> None:
    all_values = [n.value for n in net.nodes.values()]
    low, high = min(all_values), max(all_values)
    for key in net.nodes:
        node = net.nodes[key]
        node.global_quality = _rescale(node.value, low, high)
        siblings = {key}
        for pred in net.predecessors.get(key, ()):
            siblings.update(net.successors.get(pred, ()))
        if len(siblings) == 1:
            node.local_quality = 100.0
        else:
            sib_values = [net.nodes[s].value for s in siblings]
            node.local_quality = _rescale(node.value, min(sib_values), max(sib_values))


def quality(net: InteractionNetwork, key: str) -> dict[str, float]:
    """Global and local quality of a node on the 0-100 scale."""
    if net.convergence is None:
        raise NetworkError("value_iterate has not been run")
    node = net.nodes.get(key)
    if node is None:
        raise NetworkError(f"unknown state key {key!r}")
    return {"global": node.global_quality, "local": node.local_quality}


def match_state(net: InteractionNetwork, state: ProofState, mode: str) -> NodeStats | None:
    """The node for `state` under the requested key mode, or None if absent."""
    if mode != net.key_mode:
        raise NetworkError(f"network keyed {net.key_mode}, queried {mode}")
    return net.nodes.get(canonical_state(state, mode))


# --- snapshots ---------------------------------------------------------------

SNAPSHOT_VERSION = 1


def network_to_dict(net: InteractionNetwork) -> dict:
    return {
        "version": SNAPSHOT_VERSION,
        "problem_id": net.problem_id,
        "key_mode": net.key_mode,
        "start_key": net.start_key,
        "params": net.params.to_dict() if net.params else None,
        "convergence": (
            {
                "iterations": net.convergence.iterations,
                "residual": net.convergence.residual,
                "converged": net.convergence.converged,
            }
            if net.convergence
            else None
        ),
        "nodes": {
            k: {
                "visits": n.visits,
                "value": n.value,
                "global_quality": n.global_quality,
                "local_quality": n.local_quality,
                "is_goal": n.is_goal,
                "is_deadend": n.is_deadend,
                "goal_reachable": n.goal_reachable,
                "hint_value": n.hint_value,
            }
            for k, n in sorted(net.nodes.items())
        },
        "edges": [
            {
                "pre": pre,
                "post": post,
                "count": e.count,
                "kind": e.kind,
                "statement": e.statement,
            }
            for (pre, post), e in sorted(net.edges.items())
        ],
    }


def network_from_dict(data: dict) -> InteractionNetwork:
    if data.get("version") != SNAPSHOT_VERSION:
        raise NetworkError(f"unsupported snapshot version {data.get('version')!r}")
    net = InteractionNetwork(data["problem_id"], data["key_mode"], data["start_key"])
    for key, nd in data["nodes"].items():
        node = net.node(key)
        node.visits = nd["visits"]
        node.value = nd["value"]
        node.global_quality = nd["global_quality"]
        node.local_quality = nd["local_quality"]
        node.is_goal = nd["is_goal"]
        node.is_deadend = nd["is_deadend"]
        node.goal_reachable = nd["goal_reachable"]
        node.hint_value = nd.get("hint_value")
    for ed in data["edges"]:
        net.node(ed["pre"])
        net.node(ed["post"])
        edge = EdgeStats(count=ed["count"], kind=ed["kind"], statement=ed["statement"])
        net.edges[(ed["pre"], ed["post"])] = edge
        net.successors[ed["pre"]].append(ed["post"])
        net.predecessors[ed["post"]].append(ed["pre"])
    if data.get("params"):
        net.params = ValueIterationParams(**data["params"])
    if data.get("convergence"):
        net.convergence = ConvergenceReport(**data["convergence"])
    return net


def save_network(net: InteractionNetwork, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh, sort_keys=True, indent=None, separators=(",", ":"))


def load_network(path: str) -> InteractionNetwork:
    with open(path, encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))
