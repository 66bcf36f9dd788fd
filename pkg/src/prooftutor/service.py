"""Session-based HTTP API for live problem solving with on-demand and
proactive hints. Sessions are kept in memory with a write-through event log;
restart recovers them by replay."""
from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .corpus import TraceEvent, load_traces
from .expr import to_text
from .model import load_model
from .policy import ADAPTIVE, CONTROL, NetworkBundle, PolicyConfig, PolicyError, SessionEngine
from .proof import Problem
from .problems import default_problems


class CreateSessionRequest(BaseModel):
    student: str = Field(default="anonymous", max_length=64)
    policy: str | None = None  # adaptive | control | random:p (server default otherwise)


class StepRequest(BaseModel):
    kind: str = "derive"  # derive | delete
    rule: str | None = None
    premises: list[int] = Field(default_factory=list)
    statement: str | None = None
    statement_index: int | None = None


class _Session:
    def __init__(self, session_id: str, engine: SessionEngine, log_path: Path):
        self.id = session_id
        self.engine = engine
        self.log_path = log_path
        self.lock = threading.Lock()
        self.last_action = time.monotonic()
        self.flushed_events = 0
        self.flushed_predictions = 0

    def action_time(self) -> float:
        now = time.monotonic()
        elapsed = now - self.last_action
        self.last_action = now
        return round(elapsed, 3)

    def flush(self) -> None:
        events = self.engine.events
        if len(events) > self.flushed_events:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                for ev in events[self.flushed_events :]:
                    fh.write(json.dumps(ev.to_record(), sort_keys=True) + "\n")
            self.flushed_events = len(events)
        predictions = self.engine.predictions
        if len(predictions) > self.flushed_predictions:
            sidecar = self.log_path.with_suffix(".predictions.jsonl")
            with open(sidecar, "a", encoding="utf-8") as fh:
                for record in predictions[self.flushed_predictions :]:
                    fh.write(json.dumps(record.to_record(), sort_keys=True) + "\n")
            self.flushed_predictions = len(predictions)


def _policy_from_text(text: str) -> PolicyConfig:
    if text == "adaptive":
        return PolicyConfig(kind=ADAPTIVE)
    if text == "control":
        return PolicyConfig(kind=CONTROL)
    if text.startswith("random:"):
        return PolicyConfig(kind="random", random_p=float(text.split(":", 1)[1]))
    raise ValueError(f"unknown policy {text!r}")


def _hint_payload(hint) -> dict | None:
    if hint is None:
        return None
    return {
        "statement": hint.statement_text,
        "source": hint.source,
        "agency": hint.agency,
        "justified": hint.justified,
    }


def _hint_history(engine: SessionEngine) -> list[dict]:
    """Hints issued on the current problem with their justified badges."""
    problem_id = engine.problem.id
    justified_seqs = {
        ev.payload.get("hint_seq")
        for ev in engine.events
        if ev.kind == "hint_justified" and ev.problem == problem_id
    }
    history = []
    for ev in engine.events:
        if ev.problem != problem_id:
            continue
        if ev.kind in ("hint_request", "proactive_hint"):
            history.append(
                {
                    "statement": ev.payload["hinted"],
                    "source": ev.payload.get("source", "network"),
                    "agency": "on_demand" if ev.kind == "hint_request" else "proactive",
                    "justified": ev.seq in justified_seqs,
                }
            )
    return history


def _snapshot(session: _Session, feedback: dict | None = None) -> dict:
    engine = session.engine
    problem = engine.problem
    state = engine.state
    pending = engine.pending_hints()
    statements = []
    for i, stmt in enumerate(state.statements):
        just = state.justifications[i]
        statements.append(
            {
                "index": i,
                "text": to_text(stmt),
                "is_premise": i < state.n_premises,
                "rule": just.rule if just else None,
                "premises": [to_text(p) for p in just.premises] if just else None,
            }
        )
    hints = _hint_history(engine)
    issued = len(hints)
    justified = sum(1 for h in hints if h["justified"])
    return {
        "session": session.id,
        "student": engine.student,
        "policy": engine.policy.kind,
        "completed_all": engine.completed,
        "problem": {
            "id": problem.id,
            "section": problem.section,
            "index": engine.problem_index,
            "total": len(engine.problems),
            "conclusion": to_text(problem.conclusion),
            "allowed_rules": list(problem.allowed_rules),
            "optimal_length": problem.optimal_length,
        },
        "statements": statements,
        "problem_complete": state.is_complete(problem),
        "pending_hint": _hint_payload(pending[-1] if pending else None),
        "hint_history": hints,
        "hints_issued": issued,
        "hints_justified": justified,
        "feedback": feedback,
    }


def create_app(
    problems: list[Problem] | None = None,
    model_path: str | None = None,
    networks_dir: str | None = None,
    log_dir: str = "sessions",
    policy: PolicyConfig | None = None,
    frontend_dir: str | None = None,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    problems = problems if problems is not None else default_problems()
    model = load_model(model_path) if model_path else None
    networks = NetworkBundle()
    if networks_dir:
        from .cli import load_network_bundle

        networks = load_network_bundle(Path(networks_dir), problems)
    default_policy = policy or PolicyConfig(kind=CONTROL, shadow_predictions=False)
    log_root = Path(log_dir)
    log_root.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="prooftutor")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _Session] = {}

    def _new_engine(student: str, policy_config: PolicyConfig, seed: int) -> SessionEngine:
        return SessionEngine(
            student, problems, policy_config, model=model, networks=networks, seed=seed
        )

    def _recover() -> None:
        for meta_path in sorted(log_root.glob("*.meta.json")):
            session_id = meta_path.stem.replace(".meta", "")
            log_path = log_root / f"{session_id}.jsonl"
            try:
                meta = json.loads(meta_path.read_text())
                engine = _new_engine(
                    meta["student"], _policy_from_text(meta["policy"]), meta["seed"]
                )
                if log_path.exists():
                    engine.replay_events(load_traces(str(log_path)))
                    if engine.state.is_complete(engine.problem) and meta.get("advanced"):
                        engine.advance()
                session = _Session(session_id, engine, log_path)
                session.flushed_events = len(engine.events)
                sessions[session_id] = session
            except Exception:
                continue  # unrecoverable logs are skipped, not fatal

    _recover()

    def _get(session_id: str) -> _Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions")
    def create_session(request: CreateSessionRequest):
        session_id = uuid.uuid4().hex[:12]
        policy_config = default_policy
        if request.policy:
            try:
                policy_config = _policy_from_text(request.policy)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
        if policy_config.kind == ADAPTIVE and model is None:
            raise HTTPException(status_code=422, detail="no model loaded for adaptive policy")
        seed = int.from_bytes(session_id.encode()[:4], "big")
        engine = _new_engine(request.student, policy_config, seed)
        log_path = log_root / f"{session_id}.jsonl"
        if request.policy:
            policy_text = request.policy
        elif default_policy.kind == "random":
            policy_text = f"random:{default_policy.random_p}"
        else:
            policy_text = default_policy.kind
        meta = {
            "student": request.student,
            "policy": policy_text,
            "seed": seed,
        }
        (log_root / f"{session_id}.meta.json").write_text(json.dumps(meta, sort_keys=True))
        session = _Session(session_id, engine, log_path)
        sessions[session_id] = session
        start = engine.on_step_start()
        session.flush()
        return _snapshot(session, feedback={"proactive_hint": _hint_payload(start.proactive_hint)})

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _snapshot(_get(session_id))

    @app.post("/sessions/{session_id}/steps")
    def submit_step(session_id: str, step: StepRequest):
        session = _get(session_id)
        with session.lock:
            engine = session.engine
            action_time = session.action_time()
            try:
                if step.kind == "derive":
                    if step.rule is None or step.statement is None:
                        raise HTTPException(status_code=422, detail="derive needs rule and statement")
                    outcome = engine.submit_derive(
                        step.rule, tuple(step.premises), step.statement, action_time
                    )
                elif step.kind == "delete":
                    if step.statement_index is None:
                        raise HTTPException(status_code=422, detail="delete needs statement_index")
                    outcome = engine.submit_delete(step.statement_index, action_time)
                else:
                    raise HTTPException(status_code=422, detail=f"unknown step kind {step.kind!r}")
            except PolicyError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
            session.flush()
            feedback = {
                "correct": outcome.correct,
                "reason": outcome.reason,
                "completed": outcome.completed,
                "justified_hint": _hint_payload(outcome.justified_hint),
                "proactive_hint": _hint_payload(
                    outcome.next_step.proactive_hint if outcome.next_step else None
                ),
            }
            return _snapshot(session, feedback=feedback)

    @app.post("/sessions/{session_id}/hint")
    def request_hint(session_id: str):
        session = _get(session_id)
        with session.lock:
            try:
                hint = session.engine.request_hint(session.action_time())
            except PolicyError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
            session.flush()
            return _snapshot(session, feedback={"hint": _hint_payload(hint)})

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str):
        session = _get(session_id)
        with session.lock:
            try:
                moved = session.engine.advance()
            except PolicyError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
            meta_path = log_root / f"{session.id}.meta.json"
            meta = json.loads(meta_path.read_text())
            meta["advanced"] = True
            meta_path.write_text(json.dumps(meta, sort_keys=True))
            feedback = {"advanced": moved}
            if moved:
                start = session.engine.on_step_start()
                session.flush()
                feedback["proactive_hint"] = _hint_payload(start.proactive_hint)
            return _snapshot(session, feedback=feedback)

    if frontend_dir and Path(frontend_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
