"""Live consultation sessions: intake, gated question loop, final ranking.

The engine is deterministic: question selection is greedy over the actor's
logits with already-asked symptoms excluded, and the decision net gates
when to stop and diagnose.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .actor import ActorModel
from .decision import DecisionModel, sufficiency
from .diagnosis import DiagnosisModel, diagnose
from .embedding import EmbeddingTable
from .environment import build_observation
from .graph import SYMPTOM, KnowledgeGraph

AWAITING_INITIAL = "awaiting_initial"
ASKING = "asking"
CONCLUDED = "concluded"

YES = "yes"
NO = "no"


class ConsultationError(ValueError):
    code = "consultation_error"


class UnknownSymptomError(ConsultationError):
    code = "invalid_symptom"


class NotPendingError(ConsultationError):
    code = "not_pending"


class SessionConcludedError(ConsultationError):
    code = "session_concluded"


@dataclass
class Session:
    id: str
    evidence: list[int] = field(default_factory=list)
    denied: list[int] = field(default_factory=list)
    pending_question: int | None = None
    history: list[tuple[int, str]] = field(default_factory=list)
    status: str = AWAITING_INITIAL
    diagnosis: list[tuple[int, float]] | None = None
    question_count: int = 0
    max_questions: int = 30
    created_at: float = field(default_factory=time.time)
    _suff_cache: tuple | None = field(default=None, repr=False)


class ConsultationEngine:
    """Drives sessions against one immutable trained model set."""

    def __init__(
        self,
        graph: KnowledgeGraph,
        tab: EmbeddingTable,
        diagnosis_model: DiagnosisModel,
        decision_model: DecisionModel,
        actor_model: ActorModel,
        max_questions: int = 30,
    ):
        self.graph = graph
        self.tab = tab
        self.diagnosis_model = diagnosis_model
        self.decision_model = decision_model
        self.actor_model = actor_model
        self.max_questions = max_questions

    def _check_symptom(self, symptom_id: int) -> int:
        symptom_id = int(symptom_id)
        if not (0 <= symptom_id < self.graph.n_entities) or self.graph.kind(
            symptom_id
        ) != SYMPTOM:
            raise UnknownSymptomError(f"unknown symptom id {symptom_id}")
        return symptom_id

    def _evidence_vec(self, session: Session) -> np.ndarray:
        ids = np.sort(np.array(session.evidence, dtype=np.int64))
        return self.tab.entity_vecs[ids].sum(axis=0)

    def _sufficient(self, session: Session) -> bool:
        if not session.evidence:
            return False
        # pure in the evidence set: denied answers cannot change the verdict
        cached = getattr(session, "_suff_cache", None)
        if cached is not None and cached[0] == len(session.evidence):
            value = cached[1]
        else:
            value = sufficiency(self.decision_model, self._evidence_vec(session))
            session._suff_cache = (len(session.evidence), value)
        return value >= self.decision_model.threshold

    def _conclude(self, session: Session) -> None:
        session.diagnosis = diagnose(self.diagnosis_model, self._evidence_vec(session))
        session.pending_question = None
        session.status = CONCLUDED

    def start_session(self, initial_symptoms) -> Session:
        """Open a session from the patient's self-reported symptoms.

        Concludes immediately when the decision net already finds the
        initial evidence sufficient; otherwise the first question is chosen.
        """
        symptoms = [self._check_symptom(s) for s in initial_symptoms]
        if not symptoms:
            raise ConsultationError("initial symptoms must not be empty")
        deduped = list(dict.fromkeys(symptoms))
        session = Session(
            id=uuid.uuid4().hex,
            evidence=deduped,
            max_questions=self.max_questions,
        )
        if self._sufficient(session):
            self._conclude(session)
        else:
            session.status = ASKING
            self.next_question(session)
        return session

    def next_question(self, session: Session) -> int | None:
        """Pick the greedy un-asked symptom and set it pending.

        Concludes the session (returning None) when every symptom has
        already been asked.
        """
        if session.status != ASKING:
            raise SessionConcludedError("session is not taking questions")
        asked = set(session.evidence) | set(session.denied)
        obs = build_observation(self.graph, self.tab, asked, session.evidence)
        _, cache = nn.forward(self.actor_model.net, obs.vec)
        logits = cache.logits.copy()
        for s in asked:
            logits[self.actor_model.position_of(s)] = -np.inf
        if not np.isfinite(logits).any():
            self._conclude(session)  # every symptom exhausted
            return None
        question = int(self.actor_model.symptom_ids[int(np.argmax(logits))])
        session.pending_question = question
        return question

    def submit_answer(self, session: Session, symptom_id: int, answer: str) -> Session:
        """Record a yes/no answer to the pending question and advance the session."""
        if session.status == CONCLUDED:
            raise SessionConcludedError("session already concluded")
        if answer not in (YES, NO):
            raise ConsultationError(f"answer must be {YES!r} or {NO!r}")
        symptom_id = int(symptom_id)
        if session.pending_question is None or symptom_id != session.pending_question:
            raise NotPendingError(f"symptom {symptom_id} is not the pending question")

        if answer == YES:
            session.evidence.append(symptom_id)
        else:
            session.denied.append(symptom_id)
        session.history.append((symptom_id, answer))
        session.question_count += 1
        session.pending_question = None

        if self._sufficient(session) or session.question_count >= session.max_questions:
            self._conclude(session)
        else:
            self.next_question(session)
        return session
