"""Network building, value iteration vs a direct linear-solve oracle, quality."""
import random

import numpy as np
import pytest

from prooftutor.corpus import StepRecord, TraceEvent, events_to_steps
from prooftutor.expr import parse_expression
from prooftutor.network import (
    ConvergenceReport,
    InteractionNetwork,
    NetworkError,
    ValueIterationParams,
    build_network,
    load_network,
    match_state,
    network_from_dict,
    network_to_dict,
    quality,
    save_network,
    value_iterate,
)
from prooftutor.proof import ORDERED, UNORDERED, Problem, ProofState

P = parse_expression


def chain_network(traces, goal_keys, start="S0", problem_id="x"):
    """Hand-assembled network from (pre, post, kind, statement) step tuples per trace."""
    net = InteractionNetwork(problem_id, UNORDERED, start)
    net.node(start)
    for trace in traces:
        net.node(start).visits += 1
        for pre, post in trace:
            net.node(pre)
            net.node(post).visits += 1
            net.add_edge(pre, post, "derive", post)
    for key, stats in net.nodes.items():
        stats.is_goal = key in goal_keys
        stats.is_deadend = False
    for key, stats in net.nodes.items():
        stats.is_deadend = (not stats.is_goal) and not net.successors.get(key)
    return net


def dp_oracle(net, params):
    """Independent fixed point: solve (I - g P) v = r directly."""
    keys = sorted(net.nodes)
    idx = {k: i for i, k in enumerate(keys)}
    n = len(keys)
    terminal_value = {}
    for k in keys:
        node = net.nodes[k]
        if node.is_goal:
            terminal_value[k] = params.goal_reward
        elif node.is_deadend:
            terminal_value[k] = params.deadend_penalty
    transition = np.zeros((n, n))
    reward = np.zeros(n)
    for k in keys:
        i = idx[k]
        if k in terminal_value:
            continue
        reward[i] = params.step_reward
        for succ in net.successors.get(k, ()):
            transition[i, idx[succ]] = net.transition_probability(k, succ)
    fixed = np.array([terminal_value.get(k, 0.0) for k in keys])
    is_term = np.array([k in terminal_value for k in keys])
    free = ~is_term
    if free.any():
        a = np.eye(free.sum()) - params.discount * transition[np.ix_(free, free)]
        b = reward[free] + params.discount * transition[np.ix_(free, is_term)] @ fixed[is_term]
        solution = np.linalg.solve(a, b)
        out = fixed.copy()
        out[free] = solution
    else:
        out = fixed
    return {k: out[idx[k]] for k in keys}


PRECISE = ValueIterationParams(epsilon=1e-13, max_iterations=20000)


def test_chain_fixture_closed_form():
    net = chain_network([[("S0", "S1"), ("S1", "G")]], goal_keys={"G"})
    value_iterate(net, PRECISE)
    assert net.nodes["G"].value == pytest.approx(100.0, abs=1e-9)
    assert net.nodes["S1"].value == pytest.approx(89.0, abs=1e-9)
    assert net.nodes["S0"].value == pytest.approx(79.1, abs=1e-9)


def test_branch_fixture_closed_form():
    net = chain_network(
        [[("S0", "S1"), ("S1", "G")], [("S0", "D")]],
        goal_keys={"G"},
    )
    value_iterate(net, PRECISE)
    assert net.nodes["D"].is_deadend
    assert net.nodes["S1"].value == pytest.approx(89.0, abs=1e-9)
    assert net.nodes["S0"].value == pytest.approx(-5.95, abs=1e-9)


def test_goal_only_network():
    net = InteractionNetwork("x", UNORDERED, "G")
    net.node("G").visits = 1
    net.nodes["G"].is_goal = True
    report = value_iterate(net, ValueIterationParams())
    assert net.nodes["G"].value == 100.0
    assert report.iterations == 0 and report.converged


def random_network(rng, max_nodes=50):
    n = rng.randint(3, max_nodes)
    names = [f"N{i}" for i in range(n)]
    net = InteractionNetwork("r", UNORDERED, names[0])
    for name in names:
        net.node(name).visits = 1
    goals = set(rng.sample(names[1:], rng.randint(1, max(1, n // 10))))
    for i, name in enumerate(names):
        if name in goals:
            net.nodes[name].is_goal = True
            continue
        successors = rng.sample(names, rng.randint(0, min(4, n - 1)))
        for succ in successors:
            if succ != name:
                count = rng.randint(1, 5)
                for _ in range(count):
                    net.add_edge(name, succ, "derive", succ)
    for name in names:
        node = net.nodes[name]
        node.is_deadend = (not node.is_goal) and not net.successors.get(name)
    return net


def test_random_networks_match_dp_oracle():
    rng = random.Random(42)
    for _ in range(200):
        net = random_network(rng)
        value_iterate(net, PRECISE)
        oracle = dp_oracle(net, PRECISE)
        for key, expected in oracle.items():
            assert net.nodes[key].value == pytest.approx(expected, abs=1e-9)


def test_residuals_non_increasing_and_monotone_in_goal_reward():
    rng = random.Random(5)
    for _ in range(25):
        net = random_network(rng, max_nodes=20)
        low = ValueIterationParams(goal_reward=100.0, epsilon=1e-12, max_iterations=5000)
        value_iterate(net, low)
        v_low = {k: n.value for k, n in net.nodes.items()}
        high = ValueIterationParams(goal_reward=150.0, epsilon=1e-12, max_iterations=5000)
        value_iterate(net, high)
        for k, n in net.nodes.items():
            if not n.is_goal:
                assert n.value >= v_low[k] - 1e-9


def test_quality_rescale_matches_worked_arithmetic():
    net = chain_network(
        [[("S0", "S1"), ("S1", "G")], [("S0", "D")]],
        goal_keys={"G"},
    )
    value_iterate(net, PRECISE)
    # V set {-100, -5.95, 89, 100}: global(S1) = (89+100)/200*100
    assert quality(net, "S1")["global"] == pytest.approx((89 + 100) / 200 * 100, abs=1e-9)
    assert quality(net, "G")["global"] == 100.0
    assert quality(net, "D")["global"] == 0.0


def test_quality_preserves_value_order():
    rng = random.Random(9)
    for _ in range(20):
        net = random_network(rng, max_nodes=25)
        value_iterate(net, PRECISE)
        nodes = sorted(net.nodes.values(), key=lambda n: n.value)
        for a, b in zip(nodes, nodes[1:]):
            assert a.global_quality <= b.global_quality + 1e-12


def test_quality_unknown_key():
    net = chain_network([[("S0", "G")]], goal_keys={"G"})
    value_iterate(net)
    with pytest.raises(NetworkError):
        quality(net, "missing")


def test_local_quality_singleton_sibling_is_100():
    net = chain_network([[("S0", "S1"), ("S1", "G")]], goal_keys={"G"})
    value_iterate(net, PRECISE)
    assert net.nodes["S1"].local_quality == 100.0  # only successor of S0


def test_params_validation():
    with pytest.raises(NetworkError):
        ValueIterationParams(discount=1.0)
    with pytest.raises(NetworkError):
        ValueIterationParams(epsilon=0.0)


def test_non_convergence_flagged():
    net = chain_network([[("S0", "S1"), ("S1", "G")]], goal_keys={"G"})
    report = value_iterate(net, ValueIterationParams(epsilon=1e-13, max_iterations=2))
    assert not report.converged
    assert report.iterations == 2


# --- building from step records ---------------------------------------------


def make_problem():
    return Problem(
        id="mp1",
        premises=(P("p"), P("p -> q"), P("q -> r")),
        conclusion=P("r"),
        allowed_rules=("modus_ponens", "simplification", "conjunction"),
        section="training",
        optimal_length=2,
    )


def derive_event(student, seq, rule, premises, statement, t):
    return TraceEvent(student, "mp1", seq, "derive",
                      {"rule": rule, "premises": premises, "statement": statement, "correct": True}, t)


def two_trace_steps():
    prob = make_problem()
    events = []
    for student in ("s1", "s2"):
        events.append(derive_event(student, 1, "modus_ponens", [1, 0], "q", 2.0))
        events.append(derive_event(student, 2, "modus_ponens", [2, 3], "r", 2.0))
    return events_to_steps(events, prob), prob


def test_build_counts_two_identical_traces():
    steps, prob = two_trace_steps()
    net = build_network(steps, prob, UNORDERED)
    assert len(net.nodes) == 3
    for stats in net.nodes.values():
        assert stats.visits == 2
    for edge in net.edges.values():
        assert edge.count == 2
    goal_nodes = [k for k, n in net.nodes.items() if n.is_goal]
    assert len(goal_nodes) == 1


def test_empirical_probabilities_split():
    prob = make_problem()
    events = [
        derive_event("s1", 1, "modus_ponens", [1, 0], "q", 1.0),
        derive_event("s1", 2, "modus_ponens", [2, 3], "r", 1.0),
        # second student takes a different first step
        derive_event("s2", 1, "conjunction", [0, 1], "p & (p -> q)", 1.0),
    ]
    steps = events_to_steps(events, prob)
    net = build_network(steps, prob, UNORDERED)
    start = net.start_key
    succs = net.successors[start]
    assert len(succs) == 2
    for s in succs:
        assert net.transition_probability(start, s) == pytest.approx(0.5)


def test_unordered_merges_permuted_orders():
    prob = make_problem()
    events = [
        derive_event("s1", 1, "modus_ponens", [1, 0], "q", 1.0),
        derive_event("s1", 2, "conjunction", [0, 1], "p & (p -> q)", 1.0),
        derive_event("s2", 1, "conjunction", [0, 1], "p & (p -> q)", 1.0),
        derive_event("s2", 2, "modus_ponens", [1, 0], "q", 1.0),
    ]
    steps = events_to_steps(events, prob)
    unordered = build_network(steps, prob, UNORDERED)
    ordered = build_network(steps, prob, ORDERED)
    assert len(unordered.nodes) < len(ordered.nodes)


def test_match_state_modes():
    steps, prob = two_trace_steps()
    net_u = build_network(steps, prob, UNORDERED)
    net_o = build_network(steps, prob, ORDERED)
    state = ProofState.initial(prob)
    assert match_state(net_u, state, UNORDERED) is not None
    assert match_state(net_o, state, ORDERED) is not None
    with pytest.raises(NetworkError):
        match_state(net_u, state, ORDERED)


def test_empty_corpus_rejected():
    prob = make_problem()
    with pytest.raises(NetworkError, match="no corpus steps"):
        build_network([], prob, UNORDERED)


def test_snapshot_round_trip(tmp_path):
    steps, prob = two_trace_steps()
    net = build_network(steps, prob, UNORDERED)
    value_iterate(net, PRECISE)
    path = tmp_path / "net.json"
    save_network(net, str(path))
    loaded = load_network(str(path))
    assert network_to_dict(loaded) == network_to_dict(net)
