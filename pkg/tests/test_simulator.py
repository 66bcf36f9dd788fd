"""Simulator behavior: profiles, assignment, agent dynamics, determinism."""
import random

import pytest

from prooftutor.corpus import events_to_steps
from prooftutor.expr import parse_expression
from prooftutor.policy import CONTROL, RANDOM, PolicyConfig, SessionEngine
from prooftutor.problems import default_problems
from prooftutor.proof import Problem
from prooftutor.simulator import (
    ExperimentConfig,
    ProfileDistribution,
    StudentProfile,
    assign_conditions,
    generate_corpus,
    run_student,
    seed_corpus_config,
    simulate_step,
)

P = parse_expression


def tiny_problems():
    return [
        Problem(
            id="a1",
            premises=(P("p"), P("p -> q"), P("q -> r"), P("p -> j"), P("j -> k")),
            conclusion=P("r"),
            allowed_rules=("modus_ponens", "modus_tollens", "simplification"),
            section="training",
            optimal_length=2,
        ),
    ]


def expert_profile(**overrides):
    base = dict(
        skill=1.0, error_rate=0.0, speed_median=5.0, speed_sigma=0.5,
        help_propensity=0.0, hint_adoption=1.0, learning_rate=1.05,
    )
    base.update(overrides)
    return StudentProfile(**base)


def test_profile_validation():
    with pytest.raises(ValueError):
        expert_profile(skill=1.5)
    with pytest.raises(ValueError):
        expert_profile(speed_median=0.0)


def test_expert_replays_a_shortest_proof():
    problems = tiny_problems()
    config = ExperimentConfig(n_students=1, seed=0, problems=problems, stuck_prob=0.0)
    engine, _ = run_student(
        "x", expert_profile(), problems,
        PolicyConfig(kind=CONTROL, shadow_predictions=False), None, None, config, seed=3,
    )
    derives = [e for e in engine.events if e.kind == "derive"]
    assert len(derives) == 2  # exactly the optimal length
    assert all(e.payload["correct"] for e in derives)
    steps = events_to_steps(engine.events, problems[0])
    assert len(steps) == 2


def test_hint_adoption_derives_hinted_statement():
    problems = tiny_problems()
    config = ExperimentConfig(n_students=1, seed=0, problems=problems, stuck_prob=0.0)
    engine = SessionEngine(
        "x", problems, PolicyConfig(kind=RANDOM, random_p=1.0), None, None, seed=1
    )
    engine.on_step_start()  # random(1.0) always issues a proactive hint
    assert engine.pending_hints()
    hinted = engine.pending_hints()[0].statement_text
    rng = random.Random(0)
    profile, move = simulate_step(engine, expert_profile(), rng, stuck_prob=0.0)
    assert move == "hint_step"
    justified_events = [e for e in engine.events if e.kind == "hint_justified"]
    assert len(justified_events) == 1
    derive = next(e for e in engine.events if e.kind == "derive")
    from prooftutor.expr import canonical_text

    assert canonical_text(parse_expression(derive.payload["statement"])) == hinted


def test_learning_rate_raises_skill_on_justification():
    problems = tiny_problems()
    engine = SessionEngine(
        "x", problems, PolicyConfig(kind=RANDOM, random_p=1.0), None, None, seed=1
    )
    engine.on_step_start()
    profile = expert_profile(skill=0.5, learning_rate=1.2)
    rng = random.Random(0)
    profile, move = simulate_step(engine, profile, rng, stuck_prob=0.0)
    assert move == "hint_step"
    assert profile.skill == pytest.approx(0.6)


def test_zero_skill_uniform_over_applicable_moves():
    """With skill 0, realized first derivations match the uniform distribution
    over the agent's applicable-move pool (chi-squared at 3 sigma, 4000 trials)."""
    problems = tiny_problems()
    from prooftutor.simulator import agent_moves
    from prooftutor.expr import canonical_text

    probe = SessionEngine(
        "probe", problems, PolicyConfig(kind=CONTROL, shadow_predictions=False), None, None, seed=0
    )
    moves = agent_moves(probe)
    labels = [canonical_text(m.conclusion) for m in moves]
    counts = {l: 0 for l in labels}
    trials = 4000
    rng = random.Random(99)
    profile = expert_profile(skill=0.0, error_rate=0.0)
    for _ in range(trials):
        engine = SessionEngine(
            "x", problems, PolicyConfig(kind=CONTROL, shadow_predictions=False),
            None, None, seed=rng.randrange(2**31),
        )
        engine.on_step_start()
        _, move = simulate_step(engine, profile, rng, stuck_prob=0.0)
        assert move in ("on_path", "off_path")
        derive = next(e for e in engine.events if e.kind == "derive")
        counts[canonical_text(parse_expression(derive.payload["statement"]))] += 1
    expected = trials / len(labels)
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # df = len-1; loose bound ~ df + 3*sqrt(2 df)
    df = len(labels) - 1
    assert chi2 < df + 3 * (2 * df) ** 0.5 + 1


def test_assign_conditions_pairs_and_balance():
    scores = {"s1": 1.0, "s2": 2.0, "s3": 3.0, "s4": 4.0}
    adaptive, control = assign_conditions(scores, seed=5)
    assert len(adaptive) == 2 and len(control) == 2
    # adjacent pairs split across conditions
    assert ({"s1", "s2"} & set(adaptive)) and ({"s1", "s2"} & set(control))
    assert ({"s3", "s4"} & set(adaptive)) and ({"s3", "s4"} & set(control))


def test_assign_conditions_odd_and_deterministic():
    scores = {f"s{i}": float(i % 3) for i in range(7)}
    a1, c1 = assign_conditions(scores, seed=9)
    a2, c2 = assign_conditions(scores, seed=9)
    assert (a1, c1) == (a2, c2)
    assert abs(len(a1) - len(c1)) <= 1


def test_identical_scores_split_evenly():
    scores = {f"s{i}": 0.5 for i in range(4)}
    adaptive, control = assign_conditions(scores, seed=1)
    assert len(adaptive) == 2 and len(control) == 2


def test_generate_corpus_deterministic():
    config = seed_corpus_config(n_students=2, seed=3)
    config.problems = tiny_problems()
    a = generate_corpus(config)
    b = generate_corpus(config)
    assert a == b


def test_seed_corpus_has_incomplete_traces():
    config = seed_corpus_config(n_students=10, seed=4)
    config.problems = tiny_problems() * 1
    events = generate_corpus(config)
    starts = {(e.student, e.problem) for e in events}
    completes = {(e.student, e.problem) for e in events if e.kind == "problem_complete"}
    assert completes <= starts
