"""Trace-log schema, validation, persistence, and event-to-step conversion.

Trace files are line-delimited JSON, one event per line, UTF-8, canonical
(sorted) key order — append-only friendly and diff-able.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .expr import canonical_text, parse_expression
from .proof import ORDERED, UNORDERED, Problem, ProofError, ProofState, canonical_state
from .rules import RuleError, get_rule

EVENT_KINDS = (
    "derive",
    "delete",
    "hint_request",
    "proactive_hint",
    "hint_justified",
    "problem_complete",
)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    student: str
    problem: str
    seq: int
    kind: str
    payload: dict
    action_time: float  # seconds since this student's previous event

    def to_record(self) -> dict:
        return {
            "student": self.student,
            "problem": self.problem,
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "action_time": self.action_time,
        }

    @staticmethod
    def from_record(record: dict) -> "TraceEvent":
        return TraceEvent(
            student=str(record["student"]),
            problem=str(record["problem"]),
            seq=int(record["seq"]),
            kind=str(record["kind"]),
            payload=dict(record.get("payload", {})),
            action_time=float(record["action_time"]),
        )


@dataclass(frozen=True)
class StepRecord:
    """One state transition (derive or delete) with its accrued duration."""

    student: str
    problem: str
    index: int
    pre_key_ordered: str
    pre_key_unordered: str
    post_key_ordered: str
    post_key_unordered: str
    duration: float
    hint_used: bool
    kind: str  # derive | delete
    correct: bool = True


def _validate_event(ev: TraceEvent, hint_seqs: set[int], last_seq: int | None) -> None:
    if ev.kind not in EVENT_KINDS:
        raise CorpusError(f"unknown event kind {ev.kind!r}")
    if ev.action_time < 0:
        raise CorpusError(f"negative action_time {ev.action_time}")
    if last_seq is not None and ev.seq <= last_seq:
        raise CorpusError(f"non-monotone seq {ev.seq} after {last_seq}")
    if ev.kind == "derive":
        if "correct" not in ev.payload:
            raise CorpusError("derive event missing correctness flag")
        for key in ("rule", "statement"):
            if key not in ev.payload:
                raise CorpusError(f"derive event missing {key!r}")
    if ev.kind == "delete" and "statement" not in ev.payload:
        raise CorpusError("delete event missing statement")
    if ev.kind in ("hint_request", "proactive_hint") and "hinted" not in ev.payload:
        raise CorpusError(f"{ev.kind} event missing hinted statement")
    if ev.kind == "hint_justified":
        ref = ev.payload.get("hint_seq")
        if ref is None or ref not in hint_seqs:
            raise CorpusError("hint_justified without a prior hint event")


def validate_events(events: list[TraceEvent]) -> None:
    """Schema and ordering checks; raises CorpusError naming the offending seq."""
    last_seq: dict[tuple[str, str], int] = {}
    hints: dict[tuple[str, str], set[int]] = {}
    for ev in events:
        key = (ev.student, ev.problem)
        try:
            _validate_event(ev, hints.setdefault(key, set()), last_seq.get(key))
        except CorpusError as exc:
            raise CorpusError(f"event seq {ev.seq} ({ev.student}/{ev.problem}): {exc}") from None
        last_seq[key] = ev.seq
        if ev.kind in ("hint_request", "proactive_hint"):
            hints[key].add(ev.seq)


def write_traces(events: list[TraceEvent], path: str) -> None:
    validate_events(events)
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_record(), sort_keys=True) + "\n")


def load_traces(path: str) -> list[TraceEvent]:
    """Reads and validates a trace file; malformed lines reported by number."""
    events: list[TraceEvent] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(TraceEvent.from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise CorpusError(f"line {lineno}: {exc}") from None
    validate_events(events)
    return events


def corpus_hash(events: list[TraceEvent]) -> str:
    digest = hashlib.sha256()
    for ev in events:
        digest.update(json.dumps(ev.to_record(), sort_keys=True).encode("utf-8"))
    return digest.hexdigest()


def _keys(state: ProofState) -> tuple[str, str]:
    return canonical_state(state, ORDERED), canonical_state(state, UNORDERED)


def events_to_steps(events: list[TraceEvent], problem: Problem) -> list[StepRecord]:
    """Replay a trace into StepRecords.

    One record per realized derive/delete; hint traffic and incorrect attempts
    accrue their action_time into the enclosing step. hint_used comes from the
    logged hint_justified events (cross-checked against pending hints).
    Replay failures identify the offending seq.
    """
    by_student: dict[str, list[TraceEvent]] = {}
    for ev in events:
        if ev.problem == problem.id:
            by_student.setdefault(ev.student, []).append(ev)

    steps: list[StepRecord] = []
    for student in sorted(by_student):
        stream = sorted(by_student[student], key=lambda e: e.seq)
        justified_derives = {
            ev.payload.get("derive_seq") for ev in stream if ev.kind == "hint_justified"
        }
        state = ProofState.initial(problem)
        pre_ordered, pre_unordered = _keys(state)
        pending_hints: list[tuple[int, str]] = []  # (seq, canonical hinted text)
        accrued = 0.0
        index = 0
        for ev in stream:
            accrued += ev.action_time
            if ev.kind in ("hint_request", "proactive_hint"):
                pending_hints.append((ev.seq, canonical_text(parse_expression(ev.payload["hinted"]))))
                continue
            if ev.kind in ("hint_justified", "problem_complete"):
                continue
            if ev.kind == "derive":
                if not ev.payload["correct"]:
                    continue  # blocked attempt: no transition, time already accrued
                try:
                    rule = get_rule(ev.payload["rule"])
                    derived = parse_expression(ev.payload["statement"])
                    indices = tuple(ev.payload.get("premises", ()))
                    state = state.derive(rule, indices, derived)
                except (ProofError, RuleError, ValueError) as exc:
                    raise CorpusError(f"replay failed at seq {ev.seq} ({student}): {exc}") from None
                hint_used = ev.seq in justified_derives
                if hint_used:
                    dtext = canonical_text(derived)
                    if not any(h == dtext for _, h in pending_hints):
                        raise CorpusError(
                            f"seq {ev.seq}: hint_justified statement does not match a pending hint"
                        )
                    for i in range(len(pending_hints) - 1, -1, -1):
                        if pending_hints[i][1] == dtext:
                            pending_hints.pop(i)
                            break
            else:  # delete
                try:
                    target = canonical_text(parse_expression(ev.payload["statement"]))
                    idx = next(
                        i
                        for i in range(len(state.statements) - 1, -1, -1)
                        if canonical_text(state.statements[i]) == target
                    )
                    state = state.delete(idx)
                except (StopIteration, ProofError) as exc:
                    raise CorpusError(f"replay failed at seq {ev.seq} ({student}): {exc}") from None
                hint_used = False
            post_ordered, post_unordered = _keys(state)
            steps.append(
                StepRecord(
                    student=student,
                    problem=problem.id,
                    index=index,
                    pre_key_ordered=pre_ordered,
                    pre_key_unordered=pre_unordered,
                    post_key_ordered=post_ordered,
                    post_key_unordered=post_unordered,
                    duration=accrued,
                    hint_used=hint_used,
                    kind=ev.kind,
                )
            )
            index += 1
            pre_ordered, pre_unordered = post_ordered, post_unordered
            accrued = 0.0
    return steps
