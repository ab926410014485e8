"""HTTP session service over the consultation engine.

Thin JSON adapter: every behavior maps one-to-one onto engine calls.
Sessions live in memory for the service lifetime with idle eviction.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .bundle import ModelBundle
from .consultation import (
    CONCLUDED,
    ConsultationEngine,
    ConsultationError,
    NotPendingError,
    Session,
    SessionConcludedError,
    UnknownSymptomError,
)
from .graph import KnowledgeGraph

DEFAULT_IDLE_TTL = 3600.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


class StartSessionBody(BaseModel):
    initial_symptoms: list[int]


class AnswerBody(BaseModel):
    symptom_id: int
    answer: str


class SessionStore:
    """In-memory session map with idle eviction; all access is locked."""

    def __init__(self, idle_ttl: float = DEFAULT_IDLE_TTL):
        self.idle_ttl = idle_ttl
        self._sessions: dict[str, tuple[Session, float]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._lock = threading.Lock()

    def _sweep(self, now: float) -> None:
        dead = [sid for sid, (_, seen) in self._sessions.items() if now - seen > self.idle_ttl]
        for sid in dead:
            self._sessions.pop(sid, None)
            self._locks.pop(sid, None)

    def put(self, session: Session) -> None:
        now = time.time()
        with self._lock:
            self._sweep(now)
            self._sessions[session.id] = (session, now)
            self._locks[session.id] = threading.Lock()

    def get(self, session_id: str) -> tuple[Session, threading.Lock]:
        now = time.time()
        with self._lock:
            self._sweep(now)
            if session_id not in self._sessions:
                raise ApiError(404, "unknown_session", f"no session {session_id}")
            session, _ = self._sessions[session_id]
            self._sessions[session_id] = (session, now)
            return session, self._locks[session_id]


def create_app(
    bundle: ModelBundle,
    graph: KnowledgeGraph,
    max_questions: int = 30,
    idle_ttl: float = DEFAULT_IDLE_TTL,
    static_dir: str | Path | None = None,
) -> FastAPI:
    engine = ConsultationEngine(
        graph,
        bundle.embeddings,
        bundle.diagnosis,
        bundle.decision,
        bundle.actor,
        max_questions=max_questions,
    )
    store = SessionStore(idle_ttl=idle_ttl)
    app = FastAPI(title="consultation service", version="1.0")

    def question_payload(session: Session) -> dict | None:
        if session.pending_question is None:
            return None
        return {
            "id": session.pending_question,
            "name": graph.name(session.pending_question),
        }

    def diagnosis_payload(session: Session) -> list[dict] | None:
        if session.diagnosis is None:
            return None
        return [
            {"disease_id": d, "name": graph.name(d), "probability": p}
            for d, p in session.diagnosis
        ]

    def session_payload(session: Session) -> dict:
        return {
            "session_id": session.id,
            "status": session.status,
            "question": question_payload(session),
            "diagnosis": diagnosis_payload(session),
            "question_count": session.question_count,
        }

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, err: ApiError):
        return JSONResponse(
            status_code=err.status,
            content={"error": {"code": err.code, "message": err.message}},
        )

    def engine_error(err: ConsultationError) -> ApiError:
        if isinstance(err, UnknownSymptomError):
            return ApiError(422, err.code, str(err))
        if isinstance(err, (NotPendingError, SessionConcludedError)):
            return ApiError(409, err.code, str(err))
        return ApiError(422, "invalid_request", str(err))

    @app.get("/v1/symptoms")
    def list_symptoms():
        return [
            {"id": int(s), "name": graph.name(int(s))} for s in graph.symptom_ids
        ]

    @app.post("/v1/sessions", status_code=201)
    def start_session(body: StartSessionBody):
        try:
            session = engine.start_session(body.initial_symptoms)
        except ConsultationError as err:
            raise engine_error(err) from err
        store.put(session)
        return session_payload(session)

    @app.post("/v1/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody):
        session, lock = store.get(session_id)
        with lock:
            try:
                engine.submit_answer(session, body.symptom_id, body.answer)
            except ConsultationError as err:
                raise engine_error(err) from err
        return session_payload(session)

    @app.get("/v1/sessions/{session_id}")
    def transcript(session_id: str):
        session, lock = store.get(session_id)
        with lock:
            payload = session_payload(session)
            payload["evidence"] = [
                {"id": s, "name": graph.name(s)} for s in session.evidence
            ]
            payload["denied"] = [
                {"id": s, "name": graph.name(s)} for s in session.denied
            ]
            payload["history"] = [
                {"symptom_id": s, "name": graph.name(s), "answer": a}
                for s, a in session.history
            ]
            payload["concluded"] = session.status == CONCLUDED
        return payload

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
