"""Step efficiency, the hint-usage gain penalty, duration thresholds, and
the five-way step-behavior labeler."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class StepBehavior(Enum):
    EXPERT = "expert"
    STRATEGIC = "strategic"
    OPPORTUNISTIC = "opportunistic"
    FAR_OFF = "far_off"
    FUTILE = "futile"


HELPNEED_BEHAVIORS = frozenset({StepBehavior.FAR_OFF, StepBehavior.FUTILE})


def is_helpneed(behavior: StepBehavior) -> bool:
    return behavior in HELPNEED_BEHAVIORS


@dataclass(frozen=True)
class ProgressVector:
    """The six per-step quality/progress features (post-penalty when applicable)."""

    post_local_quality: float
    post_global_quality: float
    relative_local: float
    relative_global: float
    absolute_local: float
    absolute_global: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.post_local_quality,
            self.post_global_quality,
            self.relative_local,
            self.relative_global,
            self.absolute_local,
            self.absolute_global,
        )


def penalize_gain(
    pre_quality: float,
    post_quality_raw: float,
    start_quality: float,
    hint_used: bool,
) -> dict[str, float]:
    """Halve the quality gain (not the value) when the step used a hint.

    Returns post_quality plus the relative (vs previous state) and absolute
    (vs start state) progress computed from the adjusted post value.
    """
    if hint_used:
        post = pre_quality + (post_quality_raw - pre_quality) / 2.0
    else:
        post = post_quality_raw
    return {
        "post_quality": post,
        "relative_progress": post - pre_quality,
        "absolute_progress": post - start_quality,
    }


def progress_vector(
    pre_local: float,
    pre_global: float,
    post_local_raw: float,
    post_global_raw: float,
    start_local: float,
    start_global: float,
    hint_used: bool,
    penalty_enabled: bool = True,
) -> ProgressVector:
    """Both quality dimensions pushed through the gain penalty."""
    apply = hint_used and penalty_enabled
    local = penalize_gain(pre_local, post_local_raw, start_local, apply)
    global_ = penalize_gain(pre_global, post_global_raw, start_global, apply)
    return ProgressVector(
        post_local_quality=local["post_quality"],
        post_global_quality=global_["post_quality"],
        relative_local=local["relative_progress"],
        relative_global=global_["relative_progress"],
        absolute_local=local["absolute_progress"],
        absolute_global=global_["absolute_progress"],
    )


PROGRESS_COMBOS = {
    ("relative", "local"): "relative_local",
    ("relative", "global"): "relative_global",
    ("absolute", "local"): "absolute_local",
    ("absolute", "global"): "absolute_global",
}

DEFAULT_COMBO = ("absolute", "global")


def efficiency(progress: ProgressVector, combo: tuple[str, str] = DEFAULT_COMBO) -> bool:
    """A step is efficient iff the selected progress component is non-negative."""
    try:
        attr = PROGRESS_COMBOS[combo]
    except KeyError:
        raise ValueError(f"unknown progress combo {combo!r}") from None
    return getattr(progress, attr) >= 0.0


def duration_threshold(durations: list[float]) -> float:
    """Nearest-rank 75th percentile: sorted ascending, 1-based index ceil(0.75 n)."""
    if not durations:
        raise ValueError("empty duration list")
    ranked = sorted(durations)
    rank = math.ceil(0.75 * len(ranked))
    return ranked[rank - 1]


def is_long(duration: float, t75: float) -> bool:
    return duration > t75


def label_flags(long_flags: list[bool], efficient_flags: list[bool]) -> list[StepBehavior]:
    """Five-way labels from per-step (long, efficient) flags.

    Quick efficient -> expert; long efficient -> strategic; long inefficient ->
    futile. Maximal runs of quick-inefficient steps: length 1 -> opportunistic,
    length >= 2 -> far_off for every step of the run.
    """
    if len(long_flags) != len(efficient_flags):
        raise ValueError("flag lists differ in length")
    n = len(long_flags)
    labels: list[StepBehavior | None] = [None] * n
    i = 0
    while i < n:
        long_, eff = long_flags[i], efficient_flags[i]
        if eff:
            labels[i] = StepBehavior.STRATEGIC if long_ else StepBehavior.EXPERT
            i += 1
        elif long_:
            labels[i] = StepBehavior.FUTILE
            i += 1
        else:
            j = i
            while j < n and not efficient_flags[j] and not long_flags[j]:
                j += 1
            run = StepBehavior.OPPORTUNISTIC if j - i == 1 else StepBehavior.FAR_OFF
            for k in range(i, j):
                labels[k] = run
            i = j
    return labels  # type: ignore[return-value]


def label_steps(
    durations: list[float],
    progresses: list[ProgressVector],
    t75: float,
    combo: tuple[str, str] = DEFAULT_COMBO,
) -> list[StepBehavior]:
    """Labels for a problem attempt's step sequence."""
    long_flags = [is_long(d, t75) for d in durations]
    efficient_flags = [efficiency(p, combo) for p in progresses]
    return label_flags(long_flags, efficient_flags)
