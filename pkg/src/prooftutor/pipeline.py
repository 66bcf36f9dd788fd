"""Offline pipeline: corpora to networks, thresholds, observed labels, and
predictor training datasets."""
from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import StepRecord, TraceEvent, events_to_steps
from .features import StepQuality, StudentHistory, extract_features
from .metrics import StepFlags, step_hint_flags
from .model import LabeledExample
from .network import (
    InteractionNetwork,
    NetworkError,
    ValueIterationParams,
    assign_hint_values,
    build_network,
    value_iterate,
)
from .policy import NetworkBundle
from .proof import ORDERED, UNORDERED, Problem
from .stepscore import (
    ProgressVector,
    duration_threshold,
    is_helpneed,
    label_steps,
    progress_vector,
)


@dataclass
class CorpusArtifacts:
    """Everything derived from one trace corpus."""

    networks: NetworkBundle
    t75_table: dict[str, float]
    steps: dict[str, list[StepRecord]] = field(default_factory=dict)  # per problem id


def build_artifacts(
    events: list[TraceEvent],
    problems: list[Problem],
    vi_params: ValueIterationParams | None = None,
) -> CorpusArtifacts:
    """Builds per-problem networks (both key modes, values converged) and the
    per-problem 75th-percentile duration table. Problems absent from the
    corpus are skipped."""
    vi_params = vi_params or ValueIterationParams()
    bundle = NetworkBundle()
    t75_table: dict[str, float] = {}
    artifacts = CorpusArtifacts(networks=bundle, t75_table=t75_table)
    for problem in problems:
        steps = events_to_steps(events, problem)
        if not steps:
            continue
        artifacts.steps[problem.id] = steps
        for mode in (ORDERED, UNORDERED):
            net = build_network(steps, problem, mode)
            value_iterate(net, vi_params)
            if mode == UNORDERED:
                assign_hint_values(net, vi_params)  # hints rank by max backup
            table = bundle.ordered if mode == ORDERED else bundle.unordered
            table[problem.id] = net
        t75_table[problem.id] = duration_threshold([s.duration for s in steps])
    return artifacts


def _step_quality(
    net: InteractionNetwork, step: StepRecord, mode: str
) -> StepQuality | None:
    pre_key = step.pre_key_ordered if mode == ORDERED else step.pre_key_unordered
    post_key = step.post_key_ordered if mode == ORDERED else step.post_key_unordered
    pre = net.nodes.get(pre_key)
    post = net.nodes.get(post_key)
    if pre is None or post is None:
        return None
    return StepQuality(
        pre_local=pre.local_quality,
        pre_global=pre.global_quality,
        post_local=post.local_quality,
        post_global=post.global_quality,
    )


@dataclass
class LabeledStep:
    student: str
    problem: str
    index: int
    helpneed: bool
    behavior: str
    progress: ProgressVector
    duration: float
    hint_used: bool


def label_corpus(
    events: list[TraceEvent],
    problems: list[Problem],
    artifacts: CorpusArtifacts,
    key_mode: str = UNORDERED,
    penalty_enabled: bool = False,
    t75_table: dict[str, float] | None = None,
    reference: NetworkBundle | None = None,
) -> list[LabeledStep]:
    """Observed step labels for a corpus.

    Step quality is judged against the historical `reference` networks where
    both endpoint states match (the efficiency metric's native frame); other
    steps fall back to the networks built from this corpus itself, which
    contain every state by construction. Reporting uses unpenalized labels by
    default (penalty_in_reporting off); training labels pass
    penalty_enabled=True. t75 defaults to the corpus's own thresholds; pass a
    model's frozen table to mirror its predictions.
    """
    t75_table = t75_table or artifacts.t75_table
    out: list[LabeledStep] = []
    table = artifacts.networks.ordered if key_mode == ORDERED else artifacts.networks.unordered
    for problem in problems:
        net = table.get(problem.id)
        steps = artifacts.steps.get(problem.id)
        if net is None or not steps:
            continue
        ref_net = reference.get(problem.id, key_mode) if reference is not None else None
        t75 = t75_table.get(problem.id, artifacts.t75_table.get(problem.id, float("inf")))
        start_node = net.nodes[net.start_key]
        ref_start = ref_net.nodes.get(ref_net.start_key) if ref_net is not None else None
        per_student: dict[str, list[StepRecord]] = {}
        for step in steps:
            per_student.setdefault(step.student, []).append(step)
        for student in sorted(per_student):
            seq = sorted(per_student[student], key=lambda s: s.index)
            durations: list[float] = []
            progresses: list[ProgressVector] = []
            for step in seq:
                quality = None
                start_local, start_global = start_node.local_quality, start_node.global_quality
                if ref_net is not None and ref_start is not None:
                    quality = _step_quality(ref_net, step, key_mode)
                    if quality is not None:
                        start_local, start_global = (
                            ref_start.local_quality,
                            ref_start.global_quality,
                        )
                if quality is None:
                    quality = _step_quality(net, step, key_mode)
                if quality is None:
                    raise NetworkError(
                        f"state of {student}/{problem.id} step {step.index} missing "
                        "from its own corpus network"
                    )
                progresses.append(
                    progress_vector(
                        quality.pre_local,
                        quality.pre_global,
                        quality.post_local,
                        quality.post_global,
                        start_local,
                        start_global,
                        step.hint_used,
                        penalty_enabled=penalty_enabled,
                    )
                )
                durations.append(step.duration)
            behaviors = label_steps(durations, progresses, t75)
            for step, behavior, progress in zip(seq, behaviors, progresses):
                out.append(
                    LabeledStep(
                        student=student,
                        problem=problem.id,
                        index=step.index,
                        helpneed=is_helpneed(behavior),
                        behavior=behavior.value,
                        progress=progress,
                        duration=step.duration,
                        hint_used=step.hint_used,
                    )
                )
    return out


def label_index(labels: list[LabeledStep]) -> dict[tuple[str, str, int], LabeledStep]:
    return {(l.student, l.problem, l.index): l for l in labels}


def build_training_dataset(
    events: list[TraceEvent],
    problems: list[Problem],
    reference: NetworkBundle,
    labels: list[LabeledStep],
    t75_table: dict[str, float],
    key_mode: str = UNORDERED,
    penalty_enabled: bool = True,
) -> list[LabeledExample]:
    """One example per realized step: features known at the step's start
    (replayed through the same history bookkeeping live sessions use) paired
    with the step's offline label. State-based blocks appear only where the
    student's states match the reference networks."""
    by_label = label_index(labels)
    problem_order: dict[str, int] = {p.id: i for i, p in enumerate(problems)}
    table = reference.ordered if key_mode == ORDERED else reference.unordered

    steps_by_student: dict[str, list[tuple[str, list[StepRecord]]]] = {}
    flags_by_problem: dict[str, dict[tuple[str, int], StepFlags]] = {}
    for problem in problems:
        steps = events_to_steps(events, problem)
        if not steps:
            continue
        flags_by_problem[problem.id] = step_hint_flags(events, problem)
        per_student: dict[str, list[StepRecord]] = {}
        for step in steps:
            per_student.setdefault(step.student, []).append(step)
        for student, seq in per_student.items():
            steps_by_student.setdefault(student, []).append(
                (problem.id, sorted(seq, key=lambda s: s.index))
            )

    problems_by_id = {p.id: p for p in problems}
    examples: list[LabeledExample] = []
    for student in sorted(steps_by_student):
        history = StudentHistory(penalty_enabled=penalty_enabled)
        attempts = _attempt_counts(events, student)
        for problem_id, seq in sorted(
            steps_by_student[student], key=lambda item: problem_order[item[0]]
        ):
            problem = problems_by_id[problem_id]
            net = table.get(problem_id)
            start_quality = (0.0, 0.0)
            if net is not None:
                start_node = net.nodes.get(net.start_key)
                if start_node is not None:
                    start_quality = (start_node.local_quality, start_node.global_quality)
            history.start_problem(
                problem_id,
                problem.optimal_length,
                start_quality[0],
                start_quality[1],
                t75_table.get(problem_id, float("inf")),
            )
            flags = flags_by_problem.get(problem_id, {})
            for step in seq:
                label = by_label.get((student, problem_id, step.index))
                if label is not None:
                    features = extract_features(history.context_before_step())
                    examples.append(
                        LabeledExample(
                            features=features,
                            label=int(label.helpneed),
                            student=student,
                            problem=problem_id,
                            step_index=step.index,
                        )
                    )
                step_flags = flags.get((student, step.index), StepFlags(False, 0))
                for _ in range(step_flags.received):
                    history.record_hint()
                if step.hint_used:
                    history.record_justification()
                quality = _step_quality(net, step, key_mode) if net is not None else None
                history.complete_step(step.duration, step.hint_used, quality)
                # incorrect attempts folded into this step feed the accuracy prior
                for _ in range(attempts.get((problem_id, step.index), 0)):
                    history.record_attempt(False)
                history.record_attempt(step.correct)
            history.finish_problem()
    return examples


def _attempt_counts(events: list[TraceEvent], student: str) -> dict[tuple[str, int], int]:
    """Incorrect derive attempts folded into each realized step."""
    out: dict[tuple[str, int], int] = {}
    index: dict[str, int] = {}
    pending: dict[str, int] = {}
    for ev in sorted(
        (e for e in events if e.student == student), key=lambda e: (e.problem, e.seq)
    ):
        problem = ev.problem
        if ev.kind == "derive" and not ev.payload.get("correct"):
            pending[problem] = pending.get(problem, 0) + 1
        elif ev.kind == "delete" or (ev.kind == "derive" and ev.payload.get("correct")):
            idx = index.get(problem, 0)
            out[(problem, idx)] = pending.get(problem, 0)
            pending[problem] = 0
            index[problem] = idx + 1
    return out
