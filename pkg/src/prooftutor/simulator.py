"""Parameterized synthetic solvers, the four-section tutor protocol with
stratified condition assignment, and seeded A/B experiments."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import TraceEvent
from .expr import canonical_text, to_text
from .metrics import StepFlags, help_behaviors, hjr_from_events, performance, step_hint_flags
from .model import HelpNeedModel
from .pipeline import build_artifacts, label_corpus, label_index
from .policy import (
    ADAPTIVE,
    CONTROL,
    RANDOM,
    NetworkBundle,
    PolicyConfig,
    PredictionRecord,
    SessionEngine,
)
from .proof import Problem
from .problems import default_problems
from .search import find_justification, searcher
from .stepscore import StepBehavior


@dataclass(frozen=True)
class StudentProfile:
    skill: float  # probability of taking an optimal-path application
    error_rate: float  # probability an attempt is an incorrect application
    speed_median: float  # lognormal median of per-action seconds
    speed_sigma: float
    help_propensity: float  # probability of requesting a hint when stuck
    hint_adoption: float  # probability of justifying a pending hint
    learning_rate: float  # multiplicative skill gain per justified hint

    def __post_init__(self):
        for name in ("skill", "error_rate", "help_propensity", "hint_adoption"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.speed_median <= 0 or self.speed_sigma < 0:
            raise ValueError("speed parameters must be positive")


@dataclass
class ProfileDistribution:
    """Uniform sampling bounds for each profile parameter."""

    skill: tuple[float, float] = (0.15, 0.85)
    error_rate: tuple[float, float] = (0.05, 0.3)
    speed_median: tuple[float, float] = (3.0, 14.0)
    speed_sigma: tuple[float, float] = (0.4, 0.9)
    help_propensity: tuple[float, float] = (0.1, 0.45)
    hint_adoption: tuple[float, float] = (0.6, 0.95)
    learning_rate: tuple[float, float] = (1.05, 1.2)

    def sample(self, rng: random.Random) -> StudentProfile:
        def draw(bounds):
            low, high = bounds
            return rng.uniform(low, high)

        return StudentProfile(
            skill=draw(self.skill),
            error_rate=draw(self.error_rate),
            speed_median=draw(self.speed_median),
            speed_sigma=draw(self.speed_sigma),
            help_propensity=draw(self.help_propensity),
            hint_adoption=draw(self.hint_adoption),
            learning_rate=draw(self.learning_rate),
        )


HINT_HEAVY = ProfileDistribution(
    skill=(0.08, 0.45),
    error_rate=(0.1, 0.35),
    help_propensity=(0.5, 0.95),
    hint_adoption=(0.7, 1.0),
)

# historical-corpus stand-in: weaker, wander-prone solvers who often give up
SEED_CORPUS = ProfileDistribution(
    skill=(0.1, 0.55),
    error_rate=(0.1, 0.35),
    help_propensity=(0.1, 0.5),
    hint_adoption=(0.5, 0.9),
)


def seed_corpus_config(n_students: int = 24, seed: int = 0, **overrides) -> "ExperimentConfig":
    """Config preset for generating the historical stand-in corpus."""
    defaults = dict(
        n_students=n_students,
        seed=seed,
        profiles=SEED_CORPUS,
        abandon_on_cap=True,
        max_steps_factor=4,
        quit_prob=0.5,
        stuck_prob=0.15,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


@dataclass
class ExperimentConfig:
    n_students: int = 74
    seed: int = 0
    problems: list[Problem] | None = None  # defaults to the shipped set
    adaptive_policy: PolicyConfig = field(
        default_factory=lambda: PolicyConfig(kind=ADAPTIVE)
    )
    control_policy: PolicyConfig = field(
        default_factory=lambda: PolicyConfig(kind=CONTROL, shadow_predictions=True)
    )
    profiles: ProfileDistribution = field(default_factory=ProfileDistribution)
    stuck_prob: float = 0.12  # per-step chance the agent pauses and considers help
    wander_stuck_mult: float = 3.0  # stuck multiplier while lost
    lost_skill_factor: float = 0.3  # skill multiplier while lost off the optimal path
    lost_speed_mult: float = 2.5  # action-time multiplier while lost (disoriented solvers are slow)
    max_steps_factor: int = 5  # per-problem cap = factor * optimal_length
    abandon_on_cap: bool = False  # True: leave the problem incomplete (seed corpora)
    quit_prob: float = 0.0  # per-step quit chance, scaled by (1 - skill); seed corpora only

    def resolved_problems(self) -> list[Problem]:
        return self.problems if self.problems is not None else default_problems()


def _student_seed(master: int, index: int, phase: int) -> int:
    return (master * 1_000_003 + index * 7_919 + phase * 104_729) % (2**63)


def assign_conditions(
    scores: dict[str, float], seed: int
) -> tuple[list[str], list[str]]:
    """Stratified assignment: sort by pretest score, pair adjacent students,
    flip a seeded coin per pair. Group sizes differ by at most one."""
    rng = random.Random(seed)
    ordered = sorted(scores, key=lambda s: (scores[s], s))
    adaptive: list[str] = []
    control: list[str] = []
    for i in range(0, len(ordered) - 1, 2):
        first, second = ordered[i], ordered[i + 1]
        if rng.random() < 0.5:
            adaptive.append(first)
            control.append(second)
        else:
            adaptive.append(second)
            control.append(first)
    if len(ordered) % 2:
        (adaptive if rng.random() < 0.5 else control).append(ordered[-1])
    return sorted(adaptive), sorted(control)


# --- one agent step -----------------------------------------------------------


def _draw_duration(profile: StudentProfile, rng: random.Random, factor: float = 1.0) -> float:
    return round(factor * profile.speed_median * math.exp(profile.speed_sigma * rng.gauss(0.0, 1.0)), 3)


def _optimal_conclusion(engine: SessionEngine):
    """Next statement along the cached shortest proof from the problem start.

    Derivations are monotone, so the cached path stays applicable no matter
    what else the agent derived meanwhile."""
    problem = engine.problem
    if searcher(problem).start_proof() is None:  # problems are verified solvable at load
        raise RuntimeError(f"problem {problem.id} unsolvable within declared length")
    remainder = searcher(problem).main_remainder(tuple(engine.state.statements))
    return remainder[0].conclusion if remainder else None


def _expression_size(e) -> int:
    return 1 + sum(_expression_size(a) for a in e.args)


def _size_limit(problem: Problem) -> int:
    biggest = max(
        _expression_size(e) for e in problem.premises + (problem.conclusion,)
    )
    return 2 * biggest


def agent_moves(engine: SessionEngine):
    """The agent's action pool: applicable derivations whose conclusions stay
    within twice the problem's largest statement (solvers do not stack
    arbitrarily large formulas; the proof oracle still searches everything)."""
    problem = engine.problem
    limit = _size_limit(problem)
    return [
        m
        for m in searcher(problem).moves(engine.state.statements)
        if _expression_size(m.conclusion) <= limit
    ]


def _wrong_statement(engine: SessionEngine, rule, idx, rng: random.Random):
    """A statement the selected rule does not derive, for incorrect attempts."""
    from .proof import check_step
    from .expr import neg, parse_expression

    state = engine.state
    moves = searcher(engine.problem).moves(state.statements)
    candidates = [m.conclusion for m in moves] + [neg(s) for s in state.statements]
    start = rng.randrange(len(candidates)) if candidates else 0
    for offset in range(len(candidates)):
        candidate = candidates[(start + offset) % len(candidates)]
        try:
            if not check_step(state, rule, idx, candidate):
                return candidate
        except Exception:
            continue
    return neg(neg(state.statements[0]))


ON_PATH = "on_path"
OFF_PATH = "off_path"
HINT_STEP = "hint_step"
NO_STEP = "no_step"


def simulate_step(
    engine: SessionEngine,
    profile: StudentProfile,
    rng: random.Random,
    stuck_prob: float,
    skill_factor: float = 1.0,
    duration_factor: float = 1.0,
) -> tuple[StudentProfile, str]:
    """Takes one agent action; returns (profile, move class).

    Move classes: on_path / off_path own derivations, hint_step for a
    hint-adoption derivation (it completes the step but does not demonstrate
    the agent's own command of the path), no_step otherwise.
    """
    state = engine.state
    problem = engine.problem

    # a pending hint may be adopted: derive the hinted statement, justifying it
    target = None
    for pending in reversed(engine.pending_hints()):
        if not state.contains(pending.statement):
            target = pending.statement
            break
    if target is not None and rng.random() < profile.hint_adoption:
        just = find_justification(state, problem, target)
        if just is not None:
            rule, idx = just
            if rng.random() < profile.error_rate:
                wrong = _wrong_statement(engine, rule, idx, rng)
                engine.submit_derive(rule.name, idx, to_text(wrong), _draw_duration(profile, rng, duration_factor))
                return profile, NO_STEP
            outcome = engine.submit_derive(
                rule.name, idx, canonical_text(target), _draw_duration(profile, rng, duration_factor)
            )
            if outcome.justified_hint is not None:
                profile = replace(
                    profile, skill=min(1.0, profile.skill * profile.learning_rate)
                )
            return profile, HINT_STEP

    # stuck: maybe ask for help instead of acting
    if engine.in_training and rng.random() < stuck_prob:
        if rng.random() < profile.help_propensity:
            engine.request_hint(_draw_duration(profile, rng, duration_factor))
            return profile, NO_STEP

    optimal = _optimal_conclusion(engine)
    moves = agent_moves(engine)
    if rng.random() < profile.skill * skill_factor or not moves:
        conclusion = optimal
        if conclusion is None:
            return profile, NO_STEP
    else:
        conclusion = moves[rng.randrange(len(moves))].conclusion
    just = find_justification(state, problem, conclusion)
    if just is None:
        return profile, NO_STEP
    rule, idx = just
    if rng.random() < profile.error_rate:
        wrong = _wrong_statement(engine, rule, idx, rng)
        engine.submit_derive(rule.name, idx, to_text(wrong), _draw_duration(profile, rng, duration_factor))
        return profile, NO_STEP
    engine.submit_derive(rule.name, idx, canonical_text(conclusion), _draw_duration(profile, rng, duration_factor))
    off_path = optimal is not None and canonical_text(conclusion) != canonical_text(optimal)
    return profile, OFF_PATH if off_path else ON_PATH


def _drive_problem(
    engine: SessionEngine,
    profile: StudentProfile,
    rng: random.Random,
    config: ExperimentConfig,
) -> tuple[StudentProfile, bool]:
    """Runs the current problem to completion (or abandonment at the cap)."""
    problem = engine.problem
    cap = config.max_steps_factor * problem.optimal_length
    realized = 0
    attempts_guard = 0
    # latent disorientation: set by an own off-path step, cleared only by an
    # own on-path step; hint adoptions complete steps but do not clear it
    lost = False
    while not engine.state.is_complete(problem):
        if (
            config.quit_prob > 0
            and lost
            and rng.random() < config.quit_prob * (1.0 - profile.skill)
        ):
            return profile, False
        if realized >= cap:
            if config.abandon_on_cap:
                return profile, False
            conclusion = _optimal_conclusion(engine)
            if conclusion is None:
                break
            rule, idx = find_justification(engine.state, problem, conclusion)
            engine.submit_derive(
                rule.name, idx, canonical_text(conclusion), _draw_duration(profile, rng)
            )
            realized += 1
            continue
        effective_stuck = config.stuck_prob * (config.wander_stuck_mult if lost else 1.0)
        profile, move = simulate_step(
            engine,
            profile,
            rng,
            min(1.0, effective_stuck),
            skill_factor=config.lost_skill_factor if lost else 1.0,
            duration_factor=config.lost_speed_mult if lost else 1.0,
        )
        if move in (ON_PATH, OFF_PATH, HINT_STEP):
            realized += 1
        if move == OFF_PATH:
            lost = True
        elif move == ON_PATH:
            lost = False
        attempts_guard += 1
        if attempts_guard > cap * 30:
            raise RuntimeError(f"agent stalled on {problem.id}")
    return profile, True


def run_student(
    student: str,
    profile: StudentProfile,
    problems: list[Problem],
    policy: PolicyConfig,
    model: HelpNeedModel | None,
    networks: NetworkBundle | None,
    config: ExperimentConfig,
    seed: int,
    replay: list[TraceEvent] | None = None,
) -> tuple[SessionEngine, StudentProfile]:
    """Drives one student through the given problem sequence."""
    engine = SessionEngine(
        student, problems, policy, model=model, networks=networks, seed=seed
    )
    rng = random.Random(seed ^ 0x5EED)
    if replay:
        engine.replay_events(replay)
        if engine.state.is_complete(engine.problem):
            if not engine.advance():
                return engine, profile
    engine.on_step_start()
    while True:
        profile, completed = _drive_problem(engine, profile, rng, config)
        if not completed:
            if not engine.abandon():
                break
        elif not engine.advance():
            break
        engine.on_step_start()
    return engine, profile


# --- cohort reporting -----------------------------------------------------------


def _mean_sd(values: list[float]) -> dict[str, float]:
    if not values:
        return {"mean": 0.0, "sd": 0.0, "n": 0}
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "n": int(arr.size),
    }


@dataclass
class CohortReport:
    seed: int
    conditions: dict  # condition -> stats dict

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "conditions": self.conditions},
            sort_keys=True,
            separators=(",", ":"),
        )

    def to_tables(self) -> str:
        lines: list[str] = []

        def cell(stats: dict) -> str:
            return f"{stats['mean']:.1f} ({stats['sd']:.1f})"

        lines.append("Performance (per student)")
        header = f"{'section':<10} {'metric':<10} {'adaptive':>14} {'control':>14}"
        lines += [header, "-" * len(header)]
        for section in ("pretest", "training", "posttest"):
            for metric in ("length", "time_minutes", "accuracy"):
                row = []
                for condition in ("adaptive", "control"):
                    stats = self.conditions[condition]["performance"][section][metric]
                    row.append(
                        f"{stats['mean']:.2f} ({stats['sd']:.2f})"
                        if metric == "accuracy"
                        else cell(stats)
                    )
                lines.append(f"{section:<10} {metric:<10} {row[0]:>14} {row[1]:>14}")
        lines.append("")
        lines.append("Training steps (per student)")
        header = f"{'behavior':<16} {'adaptive':>14} {'control':>14}"
        lines += [header, "-" * len(header)]
        for behavior in ("expert", "strategic", "opportunistic", "far_off", "futile",
                         "helpneed", "total"):
            row = [
                cell(self.conditions[c]["steps"][behavior]) for c in ("adaptive", "control")
            ]
            lines.append(f"{behavior:<16} {row[0]:>14} {row[1]:>14}")
        lines.append("")
        lines.append("Hints (per student)")
        header = f"{'metric':<20} {'adaptive':>14} {'control':>14}"
        lines += [header, "-" * len(header)]
        for metric in ("proactive", "on_demand", "total",
                       "hjr_proactive", "hjr_on_demand", "hjr_total"):
            row = [cell(self.conditions[c]["hints"][metric]) for c in ("adaptive", "control")]
            lines.append(f"{metric:<20} {row[0]:>14} {row[1]:>14}")
        lines.append("")
        lines.append("Help behaviors (% of training steps) and predictor rates")
        header = f"{'metric':<24} {'adaptive':>14} {'control':>14}"
        lines += [header, "-" * len(header)]
        for metric in ("possible_avoidance", "possible_abuse", "possible_appropriateness"):
            row = [cell(self.conditions[c]["help_behaviors"][metric]) for c in ("adaptive", "control")]
            lines.append(f"{metric:<24} {row[0]:>14} {row[1]:>14}")
        for metric in ("fn_rate", "fp_rate", "state_based_dispatch",
                       "match_rate_ordered", "match_rate_unordered"):
            row = []
            for condition in ("adaptive", "control"):
                stats = self.conditions[condition]["predictor"].get(metric)
                row.append(f"{stats['mean']:.3f} ({stats['sd']:.3f})" if stats else "-")
            lines.append(f"{metric:<24} {row[0]:>14} {row[1]:>14}")
        return "\n".join(lines)


def _condition_stats(
    students: list[str],
    events: list[TraceEvent],
    predictions: list[PredictionRecord],
    problems: list[Problem],
    observed: dict[tuple[str, str, int], "LabeledStep"],
    flags_by_problem: dict[str, dict[tuple[str, int], StepFlags]],
) -> dict:
    student_set = set(students)
    training_ids = [p.id for p in problems if p.section == "training"]
    events_by_student: dict[str, list[TraceEvent]] = {s: [] for s in students}
    for ev in events:
        if ev.student in student_set:
            events_by_student[ev.student].append(ev)
    section_of = {p.id: p.section for p in problems}

    performance_stats: dict[str, dict] = {}
    for section in ("pretest", "training", "posttest"):
        rows = {"length": [], "time_minutes": [], "accuracy": []}
        for student in students:
            evs = [e for e in events_by_student[student] if section_of.get(e.problem) == section]
            perf = performance(evs)
            rows["length"].append(float(perf.length))
            rows["time_minutes"].append(perf.time_minutes)
            if perf.accuracy is not None:
                rows["accuracy"].append(perf.accuracy)
        performance_stats[section] = {k: _mean_sd(v) for k, v in rows.items()}

    behavior_rows: dict[str, list[float]] = {
        b.value: [] for b in StepBehavior
    }
    behavior_rows["helpneed"] = []
    behavior_rows["total"] = []
    help_rows = {"possible_avoidance": [], "possible_abuse": [], "possible_appropriateness": []}
    fn_rows, fp_rows, dispatch_rows, match_o_rows, match_u_rows = [], [], [], [], []
    hint_rows = {
        "proactive": [],
        "on_demand": [],
        "total": [],
        "hjr_proactive": [],
        "hjr_on_demand": [],
        "hjr_total": [],
    }

    predictions_index: dict[tuple[str, str, int], PredictionRecord] = {
        (p.student, p.problem, p.step_index): p for p in predictions
    }

    for student in students:
        counts = {b.value: 0 for b in StepBehavior}
        observed_flags: list[bool] = []
        predicted_flags: list[bool] = []
        step_flags: list[StepFlags] = []
        fn = fp = predicted_steps = 0
        dispatch_hits = match_o = match_u = 0
        for problem_id in training_ids:
            flags = flags_by_problem.get(problem_id, {})
            index = 0
            while (student, problem_id, index) in observed:
                label = observed[(student, problem_id, index)]
                counts[label.behavior] += 1
                observed_flags.append(label.helpneed)
                record = predictions_index.get((student, problem_id, index))
                predicted_flags.append(bool(record and record.helpneed))
                step_flags.append(flags.get((student, index), StepFlags(False, 0)))
                if record is not None:
                    predicted_steps += 1
                    if record.helpneed and not label.helpneed:
                        fp += 1
                    if not record.helpneed and label.helpneed:
                        fn += 1
                    dispatch_hits += int(record.classifier_used == "state_based")
                    match_o += int(record.matched_ordered)
                    match_u += int(record.matched_unordered)
                index += 1
        total = len(observed_flags)
        for behavior in StepBehavior:
            behavior_rows[behavior.value].append(float(counts[behavior.value]))
        behavior_rows["helpneed"].append(
            float(counts[StepBehavior.FAR_OFF.value] + counts[StepBehavior.FUTILE.value])
        )
        behavior_rows["total"].append(float(total))
        report = help_behaviors(observed_flags, predicted_flags, step_flags)
        for key in help_rows:
            help_rows[key].append(getattr(report, key))
        if predicted_steps:
            fn_rows.append(fn / predicted_steps)
            fp_rows.append(fp / predicted_steps)
            dispatch_rows.append(dispatch_hits / predicted_steps)
            match_o_rows.append(match_o / predicted_steps)
            match_u_rows.append(match_u / predicted_steps)

        evs = events_by_student[student]
        training_events = [e for e in evs if section_of.get(e.problem) == "training"]
        proactive = sum(1 for e in training_events if e.kind == "proactive_hint")
        on_demand = sum(1 for e in training_events if e.kind == "hint_request")
        hint_rows["proactive"].append(float(proactive))
        hint_rows["on_demand"].append(float(on_demand))
        hint_rows["total"].append(float(proactive + on_demand))
        rates = hjr_from_events(training_events)
        for agency in ("proactive", "on_demand", "total"):
            if rates[agency] is not None:
                hint_rows[f"hjr_{agency}"].append(rates[agency] * 100.0)

    # reconciliation: every labeled training step carries exactly one behavior
    totals = behavior_rows["total"]
    parts = [
        sum(behavior_rows[b.value][i] for b in StepBehavior) for i in range(len(totals))
    ]
    if parts != totals:
        raise RuntimeError("behavior counts do not reconcile with total steps")

    return {
        "n_students": len(students),
        "performance": performance_stats,
        "steps": {k: _mean_sd(v) for k, v in behavior_rows.items()},
        "hints": {k: _mean_sd(v) for k, v in hint_rows.items()},
        "help_behaviors": {k: _mean_sd(v) for k, v in help_rows.items()},
        "predictor": {
            "fn_rate": _mean_sd(fn_rows),
            "fp_rate": _mean_sd(fp_rows),
            "state_based_dispatch": _mean_sd(dispatch_rows),
            "match_rate_ordered": _mean_sd(match_o_rows),
            "match_rate_unordered": _mean_sd(match_u_rows),
        },
    }


def run_experiment(
    config: ExperimentConfig,
    model: HelpNeedModel,
    networks: NetworkBundle,
    baseline_events: list[TraceEvent] | None = None,
) -> tuple[CohortReport, list[TraceEvent], list[PredictionRecord]]:
    """Full A/B run: pretest, stratified assignment, training under each
    condition's policy, posttest. Deterministic per config.

    `baseline_events` (the historical corpus behind `networks`) joins the
    experiment corpus when building the observed-label networks, so quality
    values inherit the historical deadend structure."""
    problems = config.resolved_problems()
    by_section = {"pretest": [], "training": [], "posttest": []}
    for p in problems:
        if p.section in by_section:
            by_section[p.section].append(p)
    pretest = by_section["pretest"]
    master = random.Random(config.seed)
    students = [f"s{config.seed:03d}_{i:03d}" for i in range(config.n_students)]
    profiles = {s: config.profiles.sample(master) for s in students}

    # pretest: condition-independent (hints and predictions are training-gated)
    pretest_events: dict[str, list[TraceEvent]] = {}
    scores: dict[str, float] = {}
    for i, student in enumerate(students):
        engine, profiles[student] = run_student(
            student,
            profiles[student],
            pretest,
            PolicyConfig(kind=CONTROL, shadow_predictions=False),
            None,
            networks,
            config,
            _student_seed(config.seed, i, phase=1),
        )
        pretest_events[student] = engine.events
        perf = performance(engine.events)
        scores[student] = perf.accuracy if perf.accuracy is not None else 0.0

    adaptive_students, control_students = assign_conditions(scores, config.seed)

    all_events: list[TraceEvent] = []
    all_predictions: list[PredictionRecord] = []
    for i, student in enumerate(students):
        condition_policy = (
            config.adaptive_policy if student in set(adaptive_students) else config.control_policy
        )
        engine, profiles[student] = run_student(
            student,
            profiles[student],
            problems,
            condition_policy,
            model,
            networks,
            config,
            _student_seed(config.seed, i, phase=2),
            replay=pretest_events[student],
        )
        all_events.extend(engine.events)
        all_predictions.extend(engine.predictions)

    report = build_report(
        config,
        problems,
        adaptive_students,
        control_students,
        all_events,
        all_predictions,
        model,
        baseline_events=baseline_events,
        reference=networks if baseline_events else None,
    )
    return report, all_events, all_predictions


def build_report(
    config: ExperimentConfig,
    problems: list[Problem],
    adaptive_students: list[str],
    control_students: list[str],
    events: list[TraceEvent],
    predictions: list[PredictionRecord],
    model: HelpNeedModel | None,
    baseline_events: list[TraceEvent] | None = None,
    reference: NetworkBundle | None = None,
) -> CohortReport:
    """Observed labels judge experiment steps against the historical networks
    where states match, falling back to networks over the pooled corpus;
    labels are unpenalized with thresholds frozen from the model."""
    training = [p for p in problems if p.section == "training"]
    label_events = (baseline_events or []) + events
    artifacts = build_artifacts(label_events, training)
    if reference is None and baseline_events:
        reference = build_artifacts(baseline_events, training).networks
    labels = label_corpus(
        label_events,
        training,
        artifacts,
        penalty_enabled=False,
        t75_table=model.t75_table if model is not None else None,
        reference=reference,
    )
    observed = label_index(labels)
    flags_by_problem = {
        p.id: step_hint_flags(events, p) for p in training if p.id in artifacts.steps
    }
    conditions = {
        "adaptive": _condition_stats(
            adaptive_students, events, predictions, problems, observed, flags_by_problem
        ),
        "control": _condition_stats(
            control_students, events, predictions, problems, observed, flags_by_problem
        ),
    }
    return CohortReport(seed=config.seed, conditions=conditions)


def generate_corpus(
    config: ExperimentConfig,
    policy: PolicyConfig | None = None,
    networks: NetworkBundle | None = None,
    model: HelpNeedModel | None = None,
) -> list[TraceEvent]:
    """A seed corpus: every student runs all sections under one policy
    (default random proactive hints, a stand-in for prior adaptive data)."""
    policy = policy or PolicyConfig(kind=RANDOM, random_p=0.2)
    problems = config.resolved_problems()
    master = random.Random(config.seed)
    events: list[TraceEvent] = []
    for i in range(config.n_students):
        student = f"c{config.seed:03d}_{i:03d}"
        profile = config.profiles.sample(master)
        engine, _ = run_student(
            student,
            profile,
            problems,
            policy,
            model,
            networks,
            config,
            _student_seed(config.seed, i, phase=3),
        )
        events.extend(engine.events)
    return events
