import random

import pytest

from prooftutor.corpus import (
    CorpusError,
    StepRecord,
    TraceEvent,
    corpus_hash,
    events_to_steps,
    load_traces,
    validate_events,
    write_traces,
)
from prooftutor.expr import parse_expression
from prooftutor.proof import Problem

P = parse_expression


def make_problem():
    return Problem(
        id="mp1",
        premises=(P("p"), P("p -> q"), P("q -> r")),
        conclusion=P("r"),
        allowed_rules=("modus_ponens", "conjunction", "simplification"),
        section="training",
        optimal_length=2,
    )


def ev(student, problem, seq, kind, payload, t):
    return TraceEvent(student, problem, seq, kind, payload, t)


def derive(student, problem, seq, rule, premises, statement, t, correct=True):
    return ev(student, problem, seq, "derive",
              {"rule": rule, "premises": list(premises), "statement": statement, "correct": correct}, t)


def test_round_trip_random_events(tmp_path):
    rng = random.Random(3)
    events = []
    for s in range(20):
        student = f"s{s:03d}"
        seq = 0
        for k in range(50):
            seq += 1
            events.append(
                derive(student, "mp1", seq, "modus_ponens", [0, 1], "q", rng.uniform(0, 30))
            )
    path = tmp_path / "traces.jsonl"
    write_traces(events, str(path))
    first = path.read_bytes()
    loaded = load_traces(str(path))
    write_traces(loaded, str(path))
    assert path.read_bytes() == first
    assert loaded == events
    assert corpus_hash(loaded) == corpus_hash(events)


def test_negative_action_time_rejected():
    bad = [derive("s", "mp1", 1, "modus_ponens", [0, 1], "q", -1.0)]
    with pytest.raises(CorpusError, match="negative action_time"):
        validate_events(bad)


def test_non_monotone_seq_rejected():
    bad = [
        derive("s", "mp1", 2, "modus_ponens", [0, 1], "q", 1.0),
        derive("s", "mp1", 2, "modus_ponens", [0, 1], "q", 1.0),
    ]
    with pytest.raises(CorpusError, match="non-monotone"):
        validate_events(bad)


def test_hint_justified_without_prior_hint_rejected():
    bad = [ev("s", "mp1", 1, "hint_justified", {"hint_seq": 99, "derive_seq": 1}, 0.0)]
    with pytest.raises(CorpusError, match="without a prior hint"):
        validate_events(bad)


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"student": "s", "problem": "p", "seq": 1, "kind": "derive", '
                    '"payload": {}, "action_time": 0}\nnot json\n')
    with pytest.raises(CorpusError, match="line 1|line 2"):
        load_traces(str(path))


def test_single_derive_step():
    prob = make_problem()
    events = [derive("s", "mp1", 1, "modus_ponens", [1, 0], "q", 3.0)]
    steps = events_to_steps(events, prob)
    assert len(steps) == 1
    assert steps[0].duration == 3.0
    assert steps[0].hint_used is False
    assert steps[0].kind == "derive"


def test_hint_flow_folds_into_step():
    prob = make_problem()
    events = [
        ev("s", "mp1", 1, "hint_request", {"hinted": "q", "source": "network"}, 2.0),
        derive("s", "mp1", 2, "modus_ponens", [1, 0], "q", 4.0),
        ev("s", "mp1", 3, "hint_justified", {"hint_seq": 1, "derive_seq": 2}, 0.0),
    ]
    steps = events_to_steps(events, prob)
    assert len(steps) == 1
    assert steps[0].duration == 6.0
    assert steps[0].hint_used is True


def test_incorrect_attempt_folds_into_next_step():
    prob = make_problem()
    events = [
        derive("s", "mp1", 1, "modus_ponens", [1, 0], "r", 2.0, correct=False),
        derive("s", "mp1", 2, "modus_ponens", [1, 0], "q", 3.0),
    ]
    steps = events_to_steps(events, prob)
    assert len(steps) == 1
    assert steps[0].duration == 5.0


def test_delete_step_and_key_reset():
    prob = make_problem()
    events = [
        derive("s", "mp1", 1, "modus_ponens", [1, 0], "q", 3.0),
        ev("s", "mp1", 2, "delete", {"statement": "q"}, 1.5),
    ]
    steps = events_to_steps(events, prob)
    assert len(steps) == 2
    assert steps[1].kind == "delete"
    assert steps[1].post_key_unordered == steps[0].pre_key_unordered


def test_replay_failure_identifies_seq():
    prob = make_problem()
    events = [derive("s", "mp1", 7, "modus_ponens", [1, 0], "r", 1.0)]  # q not derivable as r
    with pytest.raises(CorpusError, match="seq 7"):
        events_to_steps(events, prob)


def test_duration_conservation():
    prob = make_problem()
    rng = random.Random(11)
    times = [round(rng.uniform(0.5, 20.0), 3) for _ in range(4)]
    events = [
        ev("s", "mp1", 1, "hint_request", {"hinted": "q", "source": "network"}, times[0]),
        derive("s", "mp1", 2, "modus_ponens", [1, 0], "q", times[1]),
        ev("s", "mp1", 3, "hint_justified", {"hint_seq": 1, "derive_seq": 2}, 0.0),
        derive("s", "mp1", 4, "modus_ponens", [2, 3], "r", times[2]),
        ev("s", "mp1", 5, "problem_complete", {}, 0.0),
    ]
    steps = events_to_steps(events, prob)
    assert sum(s.duration for s in steps) == pytest.approx(sum(e.action_time for e in events))


def test_multi_student_grouping_and_indices():
    prob = make_problem()
    events = []
    for student in ("b", "a"):
        events.append(derive(student, "mp1", 1, "modus_ponens", [1, 0], "q", 1.0))
        events.append(derive(student, "mp1", 2, "modus_ponens", [2, 3], "r", 1.0))
    steps = events_to_steps(events, prob)
    assert [(s.student, s.index) for s in steps] == [("a", 0), ("a", 1), ("b", 0), ("b", 1)]
