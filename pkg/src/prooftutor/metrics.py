"""Performance metrics, hint-justification rate, help-behavior rates,
targeted-rule statistics, and the two-sample KS test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import TraceEvent
from .hints import Hint
from .proof import Problem
from .search import targeted_rules

ACTION_TIME_CAP = 300.0  # seconds; five-minute cap per click-based action


@dataclass(frozen=True)
class SectionPerformance:
    length: int  # statements derived across completed problems
    time_minutes: float  # capped action time
    accuracy: float | None  # correct rule applications / total applications


def performance(events: list[TraceEvent]) -> SectionPerformance:
    """Length, capped time, and rule-application accuracy for one student's
    slice of events (typically one section). Length counts only problems with
    a problem_complete event."""
    completed = {ev.problem for ev in events if ev.kind == "problem_complete"}
    length = sum(
        1
        for ev in events
        if ev.kind == "derive" and ev.payload.get("correct") and ev.problem in completed
    )
    time_seconds = sum(min(ev.action_time, ACTION_TIME_CAP) for ev in events)
    attempts = [ev for ev in events if ev.kind == "derive"]
    correct = sum(1 for ev in attempts if ev.payload.get("correct"))
    accuracy = (correct / len(attempts)) if attempts else None
    return SectionPerformance(
        length=length,
        time_minutes=time_seconds / 60.0,
        accuracy=accuracy,
    )


def hjr(hints: list[Hint]) -> float | None:
    """Justified fraction of issued hints; None when no hints were issued."""
    if not hints:
        return None
    return sum(1 for h in hints if h.justified) / len(hints)


def hjr_from_events(events: list[TraceEvent]) -> dict[str, float | None]:
    """Per-agency HJR computed from a trace log."""
    issued = {"proactive": 0, "on_demand": 0}
    justified = {"proactive": 0, "on_demand": 0}
    kind_of_seq: dict[tuple[str, str, int], str] = {}
    for ev in events:
        if ev.kind == "proactive_hint":
            issued["proactive"] += 1
            kind_of_seq[(ev.student, ev.problem, ev.seq)] = "proactive"
        elif ev.kind == "hint_request":
            issued["on_demand"] += 1
            kind_of_seq[(ev.student, ev.problem, ev.seq)] = "on_demand"
        elif ev.kind == "hint_justified":
            agency = kind_of_seq.get((ev.student, ev.problem, ev.payload.get("hint_seq")))
            if agency:
                justified[agency] += 1
    out: dict[str, float | None] = {}
    for agency in ("proactive", "on_demand"):
        out[agency] = (justified[agency] / issued[agency]) if issued[agency] else None
    total_issued = issued["proactive"] + issued["on_demand"]
    total_justified = justified["proactive"] + justified["on_demand"]
    out["total"] = (total_justified / total_issued) if total_issued else None
    return out


@dataclass(frozen=True)
class StepFlags:
    """Hint traffic attributed to one realized step's window."""

    requested: bool
    received: int


def step_hint_flags(events: list[TraceEvent], problem: Problem) -> dict[tuple[str, int], StepFlags]:
    """Hints requested/received per realized step, keyed (student, step index).

    A step's window runs from the previous realized step's completion through
    its own completion, so a proactive hint issued at step start belongs to
    that step."""
    out: dict[tuple[str, int], StepFlags] = {}
    by_student: dict[str, list[TraceEvent]] = {}
    for ev in events:
        if ev.problem == problem.id:
            by_student.setdefault(ev.student, []).append(ev)
    for student in sorted(by_student):
        requested = False
        received = 0
        index = 0
        for ev in sorted(by_student[student], key=lambda e: e.seq):
            if ev.kind == "hint_request":
                requested = True
                received += 1
            elif ev.kind == "proactive_hint":
                received += 1
            elif ev.kind == "delete" or (
                ev.kind == "derive" and ev.payload.get("correct")
            ):
                out[(student, index)] = StepFlags(requested=requested, received=received)
                index += 1
                requested = False
                received = 0
    return out


@dataclass(frozen=True)
class HelpBehaviorReport:
    possible_avoidance: float  # percent of training steps
    possible_abuse: float
    possible_appropriateness: float
    total_steps: int  # the denominator, recorded for auditability

    def to_dict(self) -> dict:
        return {
            "possible_avoidance": self.possible_avoidance,
            "possible_abuse": self.possible_abuse,
            "possible_appropriateness": self.possible_appropriateness,
            "total_steps": self.total_steps,
        }


def help_behaviors(
    observed_helpneed: list[bool],
    predicted_helpneed: list[bool],
    flags: list[StepFlags],
) -> HelpBehaviorReport:
    """Table-of-three help-behavior rates over one student's training steps.

    avoidance: observed HelpNeed but no hints requested or received.
    abuse: neither predicted nor observed HelpNeed but hints requested.
    appropriateness: predicted HelpNeed and hints received.
    All rates use the student's total training steps as the denominator.
    """
    if not (len(observed_helpneed) == len(predicted_helpneed) == len(flags)):
        raise ValueError("per-step inputs differ in length")
    total = len(flags)
    if total == 0:
        return HelpBehaviorReport(0.0, 0.0, 0.0, 0)
    avoidance = sum(
        1
        for observed, flag in zip(observed_helpneed, flags)
        if observed and not flag.requested and flag.received == 0
    )
    abuse = sum(
        1
        for observed, predicted, flag in zip(observed_helpneed, predicted_helpneed, flags)
        if not observed and not predicted and flag.requested
    )
    appropriate = sum(
        1
        for predicted, flag in zip(predicted_helpneed, flags)
        if predicted and flag.received > 0
    )
    return HelpBehaviorReport(
        possible_avoidance=avoidance / total * 100.0,
        possible_abuse=abuse / total * 100.0,
        possible_appropriateness=appropriate / total * 100.0,
        total_steps=total,
    )


@dataclass(frozen=True)
class TargetedRuleStats:
    correct_targeted: int
    incorrect_targeted: int
    correct_other: int
    incorrect_other: int

    @property
    def total(self) -> int:
        return (
            self.correct_targeted
            + self.incorrect_targeted
            + self.correct_other
            + self.incorrect_other
        )


def targeted_rule_stats(events: list[TraceEvent], problem: Problem) -> TargetedRuleStats:
    """Rule applications partitioned by (targeted rule?, correct?). Targeted
    rules are those appearing in some minimum-length proof."""
    targeted = targeted_rules(problem)
    cells = {"ct": 0, "it": 0, "co": 0, "io": 0}
    for ev in events:
        if ev.problem != problem.id or ev.kind != "derive":
            continue
        is_targeted = ev.payload.get("rule") in targeted
        correct = bool(ev.payload.get("correct"))
        key = ("c" if correct else "i") + ("t" if is_targeted else "o")
        cells[key] += 1
    return TargetedRuleStats(
        correct_targeted=cells["ct"],
        incorrect_targeted=cells["it"],
        correct_other=cells["co"],
        incorrect_other=cells["io"],
    )


# --- Kolmogorov-Smirnov -----------------------------------------------------


def _ks_statistic(sample_a: np.ndarray, sample_b: np.ndarray) -> float:
    grid = np.concatenate([sample_a, sample_b])
    grid.sort(kind="stable")
    cdf_a = np.searchsorted(np.sort(sample_a), grid, side="right") / sample_a.size
    cdf_b = np.searchsorted(np.sort(sample_b), grid, side="right") / sample_b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def _kolmogorov_sf(lam: float) -> float:
    if lam <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return min(1.0, max(0.0, total))


def ks_test(
    sample_a: list[float], sample_b: list[float], exact: bool = False
) -> dict[str, float]:
    """Two-sample KS: D = sup |ECDF_a - ECDF_b| with an asymptotic p-value
    (effective-n small-sample correction). `exact=True` runs the full
    permutation distribution and is limited to n_a + n_b <= 20."""
    if not sample_a or not sample_b:
        raise ValueError("both samples must be nonempty")
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    d = _ks_statistic(a, b)
    if exact:
        if a.size + b.size > 20:
            raise ValueError("exact permutation test limited to n_a + n_b <= 20")
        pooled = np.concatenate([a, b])
        n = pooled.size
        hits = 0
        total = 0
        for picks in combinations(range(n), a.size):
            mask = np.zeros(n, dtype=bool)
            mask[list(picks)] = True
            total += 1
            if _ks_statistic(pooled[mask], pooled[~mask]) >= d - 1e-12:
                hits += 1
        return {"D": d, "p": hits / total}
    effective = a.size * b.size / (a.size + b.size)
    lam = (math.sqrt(effective) + 0.12 + 0.11 / math.sqrt(effective)) * d
    return {"D": d, "p": _kolmogorov_sf(lam)}
