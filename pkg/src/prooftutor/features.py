"""Predictor feature extraction: the six quality/progress features plus the
state-free history block."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stepscore import ProgressVector, StepBehavior

STATE_BASED_COLUMNS = (
    "post_local_quality",
    "post_global_quality",
    "relative_local",
    "relative_global",
    "absolute_local",
    "absolute_global",
)

STATE_FREE_COLUMNS = (
    "prev_step_duration",
    "step_index",
    "elapsed_time",
    "n_expert",
    "n_strategic",
    "n_opportunistic",
    "n_far_off",
    "n_futile",
    "hints_received",
    "hints_justified",
    "prior_helpneed_rate",
    "prior_hjr",
    "prior_accuracy",
    "difficulty",
)

SCHEMA_VERSION = 1


def feature_schema() -> dict:
    return {
        "version": SCHEMA_VERSION,
        "state_based": list(STATE_BASED_COLUMNS),
        "state_free": list(STATE_FREE_COLUMNS),
    }


@dataclass(frozen=True)
class PriorAggregates:
    """Per-student aggregates over previously completed problems."""

    helpneed_rate: float = 0.0
    hjr: float = 0.0
    accuracy: float = 0.0


@dataclass
class FeatureContext:
    """Everything known at the start of a step, before it is taken."""

    step_index: int
    prev_step_duration: float
    elapsed_time: float
    behavior_counts: dict[StepBehavior, int]
    hints_received: int
    hints_justified: int
    prior: PriorAggregates
    difficulty: int
    progress: ProgressVector | None = None  # most recent step, when states matched


@dataclass(frozen=True)
class FeatureVector:
    state_free: np.ndarray  # always populated
    state_based: np.ndarray | None  # populated only on a state match

    @property
    def matched(self) -> bool:
        return self.state_based is not None

    def combined(self) -> np.ndarray:
        if self.state_based is None:
            raise ValueError("no state-based block")
        return np.concatenate([self.state_based, self.state_free])


def extract_features(ctx: FeatureContext) -> FeatureVector:
    """Deterministic features per the schema; the six-feature block is present
    iff the most recent step's endpoint states matched the reference network."""
    counts = ctx.behavior_counts
    state_free = np.array(
        [
            ctx.prev_step_duration,
            float(ctx.step_index),
            ctx.elapsed_time,
            float(counts.get(StepBehavior.EXPERT, 0)),
            float(counts.get(StepBehavior.STRATEGIC, 0)),
            float(counts.get(StepBehavior.OPPORTUNISTIC, 0)),
            float(counts.get(StepBehavior.FAR_OFF, 0)),
            float(counts.get(StepBehavior.FUTILE, 0)),
            float(ctx.hints_received),
            float(ctx.hints_justified),
            ctx.prior.helpneed_rate,
            ctx.prior.hjr,
            ctx.prior.accuracy,
            float(ctx.difficulty),
        ]
    )
    state_based = None
    if ctx.progress is not None:
        state_based = np.array(ctx.progress.as_tuple())
    return FeatureVector(state_free=state_free, state_based=state_based)


def cold_start_context(difficulty: int, prior: PriorAggregates | None = None) -> FeatureContext:
    return FeatureContext(
        step_index=0,
        prev_step_duration=0.0,
        elapsed_time=0.0,
        behavior_counts={},
        hints_received=0,
        hints_justified=0,
        prior=prior or PriorAggregates(),
        difficulty=difficulty,
        progress=None,
    )


@dataclass
class StepQuality:
    """Quality endpoints of one completed step under the reference network."""

    pre_local: float
    pre_global: float
    post_local: float
    post_global: float


class StudentHistory:
    """Incremental per-student bookkeeping shared by live sessions and the
    offline dataset builder, so feature computation cannot drift between them.

    Behavior counts are labeled online over the prefix of steps whose endpoint
    states matched the reference network; unmatched steps are excluded from the
    run-labeling sequence.
    """

    def __init__(self, penalty_enabled: bool = True):
        self.penalty_enabled = penalty_enabled
        self.completed_problems: list[dict] = []
        self._reset_problem_state()

    def _reset_problem_state(self) -> None:
        self.problem_id: str | None = None
        self.difficulty = 0
        self.start_local = 0.0
        self.start_global = 0.0
        self.t75 = float("inf")
        self.step_index = 0
        self.elapsed = 0.0
        self.prev_duration = 0.0
        self.hints_received = 0
        self.hints_justified = 0
        self.correct_attempts = 0
        self.total_attempts = 0
        self.last_progress: ProgressVector | None = None
        self._labelable_durations: list[float] = []
        self._labelable_progress: list[ProgressVector] = []

    def start_problem(self, problem_id: str, difficulty: int,
                      start_local: float, start_global: float, t75: float) -> None:
        self._reset_problem_state()
        self.problem_id = problem_id
        self.difficulty = difficulty
        self.start_local = start_local
        self.start_global = start_global
        self.t75 = t75

    def prior_aggregates(self) -> PriorAggregates:
        if not self.completed_problems:
            return PriorAggregates()
        hn = [p["helpneed_rate"] for p in self.completed_problems]
        hjr = [p["hjr"] for p in self.completed_problems if p["hjr"] is not None]
        acc = [p["accuracy"] for p in self.completed_problems if p["accuracy"] is not None]
        return PriorAggregates(
            helpneed_rate=sum(hn) / len(hn),
            hjr=sum(hjr) / len(hjr) if hjr else 0.0,
            accuracy=sum(acc) / len(acc) if acc else 0.0,
        )

    def _behavior_counts(self) -> dict[StepBehavior, int]:
        from .stepscore import label_steps

        counts: dict[StepBehavior, int] = {}
        if self._labelable_durations:
            labels = label_steps(self._labelable_durations, self._labelable_progress, self.t75)
            for label in labels:
                counts[label] = counts.get(label, 0) + 1
        return counts

    def context_before_step(self) -> FeatureContext:
        return FeatureContext(
            step_index=self.step_index,
            prev_step_duration=self.prev_duration,
            elapsed_time=self.elapsed,
            behavior_counts=self._behavior_counts(),
            hints_received=self.hints_received,
            hints_justified=self.hints_justified,
            prior=self.prior_aggregates(),
            difficulty=self.difficulty,
            progress=self.last_progress,
        )

    def record_attempt(self, correct: bool) -> None:
        self.total_attempts += 1
        if correct:
            self.correct_attempts += 1

    def record_hint(self, justified: bool = False) -> None:
        self.hints_received += 1
        if justified:
            self.hints_justified += 1

    def record_justification(self) -> None:
        self.hints_justified += 1

    def complete_step(self, duration: float, hint_used: bool,
                      quality: StepQuality | None) -> None:
        """Called after each realized derive/delete step; `quality` is None
        when either endpoint state missed the reference network."""
        from .stepscore import progress_vector

        self.step_index += 1
        self.elapsed += duration
        self.prev_duration = duration
        if quality is None:
            self.last_progress = None
            return
        progress = progress_vector(
            quality.pre_local,
            quality.pre_global,
            quality.post_local,
            quality.post_global,
            self.start_local,
            self.start_global,
            hint_used,
            penalty_enabled=self.penalty_enabled,
        )
        self.last_progress = progress
        self._labelable_durations.append(duration)
        self._labelable_progress.append(progress)

    def finish_problem(self) -> None:
        """Folds the finished problem into the prior-problem aggregates."""
        from .stepscore import is_helpneed, label_steps

        helpneed_rate = 0.0
        if self._labelable_durations:
            labels = label_steps(self._labelable_durations, self._labelable_progress, self.t75)
            helpneed_rate = sum(1 for b in labels if is_helpneed(b)) / len(labels)
        self.completed_problems.append(
            {
                "problem": self.problem_id,
                "helpneed_rate": helpneed_rate,
                "hjr": (self.hints_justified / self.hints_received) if self.hints_received else None,
                "accuracy": (self.correct_attempts / self.total_attempts) if self.total_attempts else None,
            }
        )
        self._reset_problem_state()
