"""Per-step decision loop: predictions at step start, proactive hints under the
adaptive policy, on-demand hints for everyone, and session bookkeeping."""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .corpus import TraceEvent
from .expr import canonical_text, normalize, parse_expression
from .features import StepQuality, StudentHistory, extract_features
from .hints import ON_DEMAND, PROACTIVE, Hint, next_step_hint
from .model import HelpNeedModel, Prediction, predict
from .network import InteractionNetwork
from .proof import (
    ORDERED,
    UNORDERED,
    Problem,
    ProofError,
    ProofState,
    canonical_state,
    check_step,
)
from .rules import RuleError, get_rule

ADAPTIVE = "adaptive"
CONTROL = "control"
RANDOM = "random"


class PolicyError(RuntimeError):
    pass


@dataclass
class PolicyConfig:
    kind: str = CONTROL
    random_p: float = 0.0
    penalty_enabled: bool = True
    key_mode: str = UNORDERED
    shadow_predictions: bool = True  # control logs predictions without acting
    cooldown: int = 0  # minimum steps between proactive hints

    def __post_init__(self):
        if self.kind not in (ADAPTIVE, CONTROL, RANDOM):
            raise PolicyError(f"unknown policy kind {self.kind!r}")
        if self.kind == RANDOM and not 0.0 <= self.random_p <= 1.0:
            raise PolicyError("random_p must be in [0, 1]")
        if self.key_mode not in (ORDERED, UNORDERED):
            raise PolicyError(f"unknown key mode {self.key_mode!r}")


@dataclass(frozen=True)
class PredictionRecord:
    student: str
    problem: str
    step_index: int
    score: float
    classifier_used: str
    helpneed: bool
    acted: bool  # a proactive hint was actually issued
    matched_ordered: bool
    matched_unordered: bool

    def to_record(self) -> dict:
        return {
            "student": self.student,
            "problem": self.problem,
            "step_index": self.step_index,
            "score": self.score,
            "classifier_used": self.classifier_used,
            "helpneed": self.helpneed,
            "acted": self.acted,
            "matched_ordered": self.matched_ordered,
            "matched_unordered": self.matched_unordered,
        }

    @staticmethod
    def from_record(data: dict) -> "PredictionRecord":
        return PredictionRecord(
            student=data["student"],
            problem=data["problem"],
            step_index=data["step_index"],
            score=data["score"],
            classifier_used=data["classifier_used"],
            helpneed=data["helpneed"],
            acted=data["acted"],
            matched_ordered=data["matched_ordered"],
            matched_unordered=data["matched_unordered"],
        )


@dataclass
class StepStartOutcome:
    proactive_hint: Hint | None = None
    prediction: PredictionRecord | None = None


@dataclass
class StepOutcome:
    correct: bool
    completed: bool
    reason: str = ""
    justified_hint: Hint | None = None
    next_step: StepStartOutcome | None = None


@dataclass
class NetworkBundle:
    """Reference (historical) networks per problem, both key modes."""

    ordered: dict[str, InteractionNetwork] = field(default_factory=dict)
    unordered: dict[str, InteractionNetwork] = field(default_factory=dict)

    def get(self, problem_id: str, mode: str) -> InteractionNetwork | None:
        table = self.ordered if mode == ORDERED else self.unordered
        return table.get(problem_id)


@dataclass
class _PendingHint:
    hint: Hint
    seq: int


class SessionEngine:
    """One student's pass through the problem sequence under a policy.

    All mutations append TraceEvents; replaying the event log reconstructs the
    session state. Hints and predictions are active during training only.
    """

    def __init__(
        self,
        student: str,
        problems: list[Problem],
        policy: PolicyConfig,
        model: HelpNeedModel | None = None,
        networks: NetworkBundle | None = None,
        seed: int = 0,
    ):
        if policy.kind == ADAPTIVE and model is None:
            raise PolicyError("adaptive policy requires a trained model")
        if not problems:
            raise PolicyError("session needs at least one problem")
        self.student = student
        self.problems = problems
        self.policy = policy
        self.model = model
        self.networks = networks or NetworkBundle()
        self.rng = random.Random(seed)
        self.history = StudentHistory(penalty_enabled=policy.penalty_enabled)
        self.events: list[TraceEvent] = []
        self.predictions: list[PredictionRecord] = []
        self.problem_index = 0
        self.state: ProofState = ProofState.initial(problems[0])
        self.pending: list[_PendingHint] = []
        self.completed = False
        self._seq = 0
        self._accrued = 0.0
        self._last_proactive_step = -(10**9)
        self._begin_problem()

    # --- helpers -------------------------------------------------------------

    @property
    def problem(self) -> Problem:
        return self.problems[self.problem_index]

    @property
    def in_training(self) -> bool:
        return not self.completed and self.problem.section == "training"

    def pending_hints(self) -> list[Hint]:
        return [p.hint for p in self.pending]

    def _hint_net(self) -> InteractionNetwork | None:
        return self.networks.get(self.problem.id, UNORDERED)

    def _node_quality(self, state: ProofState) -> tuple[float, float] | None:
        net = self.networks.get(self.problem.id, self.policy.key_mode)
        if net is None:
            return None
        node = net.nodes.get(canonical_state(state, self.policy.key_mode))
        if node is None:
            return None
        return node.local_quality, node.global_quality

    def _emit(self, kind: str, payload: dict, action_time: float) -> TraceEvent:
        self._seq += 1
        ev = TraceEvent(self.student, self.problem.id, self._seq, kind, payload, action_time)
        self.events.append(ev)
        return ev

    def _begin_problem(self) -> None:
        problem = self.problem
        self.state = ProofState.initial(problem)
        self.pending = []
        self._seq = 0
        self._accrued = 0.0
        self._last_proactive_step = -(10**9)
        start = self._node_quality(self.state)
        t75 = float("inf")
        if self.model is not None:
            t75 = self.model.t75_table.get(problem.id, float("inf"))
        self.history.start_problem(
            problem.id,
            problem.optimal_length,
            start[0] if start else 0.0,
            start[1] if start else 0.0,
            t75,
        )

    # --- the policy decision at step start ------------------------------------

    def on_step_start(self) -> StepStartOutcome:
        """Predict (adaptive, or control in shadow mode) and maybe issue a
        proactive hint; control never acts, random(p) flips a seeded coin."""
        if not self.in_training:
            return StepStartOutcome()
        outcome = StepStartOutcome()
        step_index = self.history.step_index
        if self.policy.kind in (ADAPTIVE, CONTROL) and self.model is not None:
            if self.policy.kind == CONTROL and not self.policy.shadow_predictions:
                return outcome
            matched_o, matched_u = self._match_flags()
            features = extract_features(self.history.context_before_step())
            prediction: Prediction = predict(self.model, features)
            act = self.policy.kind == ADAPTIVE and prediction.helpneed
            if act and self.policy.cooldown > 0:
                if step_index - self._last_proactive_step <= self.policy.cooldown:
                    act = False
            record = PredictionRecord(
                student=self.student,
                problem=self.problem.id,
                step_index=step_index,
                score=prediction.score,
                classifier_used=prediction.classifier_used,
                helpneed=prediction.helpneed,
                acted=act,
                matched_ordered=matched_o,
                matched_unordered=matched_u,
            )
            self.predictions.append(record)
            outcome.prediction = record
            if act:
                outcome.proactive_hint = self._issue_proactive(step_index)
        elif self.policy.kind == RANDOM:
            if self.rng.random() < self.policy.random_p:
                outcome.proactive_hint = self._issue_proactive(step_index)
        return outcome

    def _match_flags(self) -> tuple[bool, bool]:
        flags = []
        for mode in (ORDERED, UNORDERED):
            net = self.networks.get(self.problem.id, mode)
            flags.append(net is not None and canonical_state(self.state, mode) in net.nodes)
        return flags[0], flags[1]

    def _issue_proactive(self, step_index: int) -> Hint:
        hint = next_step_hint(
            self._hint_net(), self.state, self.problem,
            agency=PROACTIVE, issued_at_step=step_index,
        )
        # one pending proactive at a time: a fresh one replaces a stale one
        self.pending = [p for p in self.pending if p.hint.agency != PROACTIVE]
        ev = self._emit(
            "proactive_hint", {"hinted": hint.statement_text, "source": hint.source}, 0.0
        )
        self.pending.append(_PendingHint(hint, ev.seq))
        self.history.record_hint()
        self._last_proactive_step = step_index
        return hint

    # --- student actions -------------------------------------------------------

    def request_hint(self, action_time: float = 0.0) -> Hint:
        """On-demand hint, available to every condition during training."""
        if not self.in_training:
            raise PolicyError("hints are only available during training")
        hint = next_step_hint(
            self._hint_net(), self.state, self.problem,
            agency=ON_DEMAND, issued_at_step=self.history.step_index,
        )
        ev = self._emit(
            "hint_request", {"hinted": hint.statement_text, "source": hint.source}, action_time
        )
        self.pending.append(_PendingHint(hint, ev.seq))
        self.history.record_hint()
        return hint

    def _justify_pending(self, derived) -> tuple[Hint | None, int | None]:
        """The derive justifies at most the most recent unjustified matching hint."""
        target = normalize(derived)
        for i in range(len(self.pending) - 1, -1, -1):
            item = self.pending[i]
            if normalize(item.hint.statement) == target:
                del self.pending[i]
                return replace(item.hint, justified=True), item.seq
        return None, None

    def submit_derive(
        self,
        rule_name: str,
        premise_indices: tuple[int, ...] | list[int],
        derived_text: str,
        action_time: float = 0.0,
    ) -> StepOutcome:
        if self.completed:
            raise PolicyError("session already completed")
        try:
            rule = get_rule(rule_name)
            derived = parse_expression(derived_text)
            correct = check_step(self.state, rule, tuple(premise_indices), derived)
        except (ProofError, RuleError, ValueError) as exc:
            raise PolicyError(str(exc)) from None
        duplicate = correct and self.state.contains(derived)
        if duplicate:
            correct = False
        self.history.record_attempt(correct)
        self._accrued += action_time
        event = self._emit(
            "derive",
            {
                "rule": rule_name,
                "premises": list(premise_indices),
                "statement": derived_text,
                "correct": correct,
            },
            action_time,
        )
        if not correct:
            return StepOutcome(
                correct=False,
                completed=False,
                reason="already derived" if duplicate else "rule does not apply",
            )
        pre_quality = self._node_quality(self.state)
        self.state = self.state.derive(rule, tuple(premise_indices), derived)
        justified, hint_seq = self._justify_pending(derived)
        if justified is not None:
            self.history.record_justification()
            self._emit("hint_justified", {"hint_seq": hint_seq, "derive_seq": event.seq}, 0.0)
        return self._finish_step(pre_quality, justified)

    def submit_delete(self, statement_index: int, action_time: float = 0.0) -> StepOutcome:
        if self.completed:
            raise PolicyError("session already completed")
        try:
            target = self.state.statements[statement_index]
            new_state = self.state.delete(statement_index)
        except (IndexError, ProofError) as exc:
            raise PolicyError(str(exc)) from None
        pre_quality = self._node_quality(self.state)
        self.state = new_state
        self._accrued += action_time
        self._emit("delete", {"statement": canonical_text(target)}, action_time)
        return self._finish_step(pre_quality, None)

    def _finish_step(
        self, pre_quality: tuple[float, float] | None, justified: Hint | None
    ) -> StepOutcome:
        post_quality = self._node_quality(self.state)
        quality = None
        if pre_quality is not None and post_quality is not None:
            quality = StepQuality(*pre_quality, *post_quality)
        self.history.complete_step(self._accrued, justified is not None, quality)
        self._accrued = 0.0
        completed = self.state.is_complete(self.problem)
        outcome = StepOutcome(correct=True, completed=completed, justified_hint=justified)
        if completed:
            self._emit("problem_complete", {}, 0.0)
            self.history.finish_problem()
        else:
            outcome.next_step = self.on_step_start()
        return outcome

    def advance(self) -> bool:
        """Move to the next problem; False when the sequence is exhausted."""
        if self.completed:
            return False
        if not self.state.is_complete(self.problem):
            raise PolicyError("current problem is not complete")
        if self.problem_index + 1 >= len(self.problems):
            self.completed = True
            return False
        self.problem_index += 1
        self._begin_problem()
        return True

    def abandon(self) -> bool:
        """Leave the current problem incomplete and move on; False at the end."""
        if self.completed or self.problem_index + 1 >= len(self.problems):
            self.completed = True
            return False
        self.history.finish_problem()
        self.problem_index += 1
        self._begin_problem()
        return True

    # --- recovery ----------------------------------------------------------------

    def replay_events(self, events: list[TraceEvent]) -> None:
        """Rebuilds session state from a prior event log.

        Policy decisions are not re-fired: logged hints are restored verbatim
        and bookkeeping recomputed deterministically from the networks.
        """
        for ev in events:
            while ev.problem != self.problem.id:
                if not self.advance():
                    raise PolicyError(f"replay refers to unknown problem {ev.problem!r}")
            self._seq = ev.seq
            if ev.kind in ("hint_request", "proactive_hint"):
                agency = ON_DEMAND if ev.kind == "hint_request" else PROACTIVE
                hint = Hint(
                    parse_expression(ev.payload["hinted"]),
                    ev.payload.get("source", "network"),
                    agency,
                    issued_at_step=self.history.step_index,
                )
                if agency == PROACTIVE:
                    self.pending = [p for p in self.pending if p.hint.agency != PROACTIVE]
                    self._last_proactive_step = self.history.step_index
                self.pending.append(_PendingHint(hint, ev.seq))
                self.history.record_hint()
                self.events.append(ev)
            elif ev.kind == "derive":
                correct = ev.payload["correct"]
                self.history.record_attempt(correct)
                self._accrued += ev.action_time
                self.events.append(ev)
                if not correct:
                    continue
                rule = get_rule(ev.payload["rule"])
                derived = parse_expression(ev.payload["statement"])
                pre_quality = self._node_quality(self.state)
                self.state = self.state.derive(rule, tuple(ev.payload.get("premises", ())), derived)
                justified, _ = self._justify_pending(derived)
                if justified is not None:
                    self.history.record_justification()
                self._replay_finish_step(pre_quality, justified)
            elif ev.kind == "delete":
                target_text = ev.payload["statement"]
                idx = next(
                    i
                    for i in range(len(self.state.statements) - 1, -1, -1)
                    if canonical_text(self.state.statements[i]) == target_text
                )
                pre_quality = self._node_quality(self.state)
                self._accrued += ev.action_time
                self.state = self.state.delete(idx)
                self.events.append(ev)
                self._replay_finish_step(pre_quality, None)
            else:  # hint_justified, problem_complete
                self.events.append(ev)

    def _replay_finish_step(self, pre_quality, justified) -> None:
        post_quality = self._node_quality(self.state)
        quality = None
        if pre_quality is not None and post_quality is not None:
            quality = StepQuality(*pre_quality, *post_quality)
        self.history.complete_step(self._accrued, justified is not None, quality)
        self._accrued = 0.0
        if self.state.is_complete(self.problem):
            self.history.finish_problem()
