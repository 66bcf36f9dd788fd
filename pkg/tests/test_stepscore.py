import random

import pytest
from hypothesis import given, strategies as st

from prooftutor.stepscore import (
    HELPNEED_BEHAVIORS,
    ProgressVector,
    StepBehavior,
    duration_threshold,
    efficiency,
    is_helpneed,
    label_flags,
    label_steps,
    penalize_gain,
    progress_vector,
)


def test_worked_example_with_hint():
    out = penalize_gain(81.0, 87.0, 74.0, hint_used=True)
    assert out["post_quality"] == 84.0
    assert out["absolute_progress"] == 10.0
    assert out["relative_progress"] == 3.0


def test_worked_example_without_hint():
    out = penalize_gain(81.0, 87.0, 74.0, hint_used=False)
    assert out["post_quality"] == 87.0
    assert out["absolute_progress"] == 13.0


def test_zero_gain_unchanged():
    out = penalize_gain(81.0, 81.0, 74.0, hint_used=True)
    assert out["post_quality"] == 81.0


finite = st.floats(min_value=-1000, max_value=1000, allow_nan=False)


@given(finite, finite, finite)
def test_halving_identity(pre, post_raw, start):
    """penalized gain == raw gain / 2 exactly when a hint was used."""
    raw = penalize_gain(pre, post_raw, start, hint_used=False)
    pen = penalize_gain(pre, post_raw, start, hint_used=True)
    assert pen["relative_progress"] == pytest.approx((post_raw - pre) / 2.0, abs=1e-9)
    assert raw["relative_progress"] == pytest.approx(post_raw - pre, abs=1e-9)


@given(finite, finite, finite)
def test_penalty_moves_gain_toward_zero(pre, post_raw, start):
    raw_gain = post_raw - pre
    pen = penalize_gain(pre, post_raw, start, hint_used=True)
    if raw_gain >= 0:
        assert pen["post_quality"] <= post_raw + 1e-12
        assert pen["post_quality"] >= pre - 1e-12
    else:
        assert pen["post_quality"] >= post_raw - 1e-12
        assert pen["post_quality"] <= pre + 1e-12


def test_efficiency_boundaries():
    def vec(abs_global):
        return ProgressVector(0, 0, 0, 0, 0, abs_global)

    assert efficiency(vec(10.0))
    assert efficiency(vec(0.0))
    assert not efficiency(vec(-2.0))


def test_efficiency_combo_selection():
    v = ProgressVector(
        post_local_quality=50, post_global_quality=60,
        relative_local=-1, relative_global=2, absolute_local=3, absolute_global=-4,
    )
    assert not efficiency(v, ("relative", "local"))
    assert efficiency(v, ("relative", "global"))
    assert efficiency(v, ("absolute", "local"))
    assert not efficiency(v, ("absolute", "global"))
    with pytest.raises(ValueError):
        efficiency(v, ("median", "global"))


def test_duration_threshold_nearest_rank():
    assert duration_threshold([10, 20, 30, 40]) == 30
    assert duration_threshold([5, 10, 15, 20, 100]) == 20
    assert duration_threshold([7]) == 7
    with pytest.raises(ValueError):
        duration_threshold([])


@given(st.lists(st.floats(min_value=0, max_value=10000, allow_nan=False), min_size=1, max_size=200))
def test_threshold_covers_75_percent(durations):
    t75 = duration_threshold(durations)
    at_or_below = sum(1 for d in durations if d <= t75)
    assert at_or_below / len(durations) >= 0.75
    assert t75 in durations


def test_label_example_sequence():
    flags = [(False, True), (False, False), (False, False), (True, False), (True, True)]
    labels = label_flags([l for l, _ in flags], [e for _, e in flags])
    assert labels == [
        StepBehavior.EXPERT,
        StepBehavior.FAR_OFF,
        StepBehavior.FAR_OFF,
        StepBehavior.FUTILE,
        StepBehavior.STRATEGIC,
    ]


def test_all_quick_efficient_is_all_expert():
    labels = label_flags([False] * 6, [True] * 6)
    assert labels == [StepBehavior.EXPERT] * 6
    assert not any(is_helpneed(b) for b in labels)


def test_isolated_quick_inefficient_is_opportunistic():
    labels = label_flags([False, False, False], [True, False, True])
    assert labels[1] == StepBehavior.OPPORTUNISTIC
    assert not is_helpneed(labels[1])


def oracle_labels(long_flags, eff_flags):
    """Independent reimplementation: truth table plus run rule via run-splitting."""
    n = len(long_flags)
    out = [None] * n
    runs = []
    current = []
    for i in range(n):
        if not long_flags[i] and not eff_flags[i]:
            current.append(i)
        else:
            if current:
                runs.append(current)
                current = []
    if current:
        runs.append(current)
    for run in runs:
        label = StepBehavior.OPPORTUNISTIC if len(run) == 1 else StepBehavior.FAR_OFF
        for i in run:
            out[i] = label
    for i in range(n):
        if out[i] is None:
            if eff_flags[i]:
                out[i] = StepBehavior.STRATEGIC if long_flags[i] else StepBehavior.EXPERT
            else:
                out[i] = StepBehavior.FUTILE
    return out


def test_labeler_matches_oracle_10k_random_sequences():
    rng = random.Random(123)
    for _ in range(10000):
        n = rng.randint(0, 12)
        long_flags = [rng.random() < 0.4 for _ in range(n)]
        eff_flags = [rng.random() < 0.6 for _ in range(n)]
        assert label_flags(long_flags, eff_flags) == oracle_labels(long_flags, eff_flags)


@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=40))
def test_labeler_properties(flags):
    long_flags = [l for l, _ in flags]
    eff_flags = [e for _, e in flags]
    labels = label_flags(long_flags, eff_flags)
    assert len(labels) == len(flags)  # exactly one behavior per step
    far_off = sum(1 for b in labels if b == StepBehavior.FAR_OFF)
    # far-off steps appear in runs of >= 2
    runs = 0
    i = 0
    while i < len(labels):
        if labels[i] == StepBehavior.FAR_OFF:
            j = i
            while j < len(labels) and labels[j] == StepBehavior.FAR_OFF:
                j += 1
            assert j - i >= 2
            runs += 1
            i = j
        else:
            i += 1
    assert far_off >= 2 * runs
    for b in labels:
        assert is_helpneed(b) == (b in HELPNEED_BEHAVIORS)


def test_label_steps_end_to_end():
    vecs = [
        progress_vector(74, 74, 81, 81, 74, 74, hint_used=False),
        progress_vector(81, 81, 87, 87, 74, 74, hint_used=True),
        progress_vector(84, 84, 70, 70, 74, 74, hint_used=False),
    ]
    labels = label_steps([3.0, 4.0, 120.0], vecs, t75=30.0)
    assert labels[0] == StepBehavior.EXPERT
    assert labels[1] == StepBehavior.EXPERT  # halved gain still non-negative
    assert labels[2] == StepBehavior.FUTILE  # long and absolute progress negative


def test_penalty_can_flip_efficiency_sign_only_toward_zero():
    # raw gain positive, absolute progress positive either way
    raw = progress_vector(81, 81, 87, 87, 74, 74, hint_used=True, penalty_enabled=False)
    pen = progress_vector(81, 81, 87, 87, 74, 74, hint_used=True, penalty_enabled=True)
    assert raw.absolute_global == 13.0
    assert pen.absolute_global == 10.0
