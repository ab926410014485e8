"""Simulated-patient episode environment over the knowledge graph.

Each episode hides a sampled disease; the agent asks symptoms and earns +1
for a new present symptom, -1 for repeats or absent ones. The episode ends
when the decision net calls the evidence sufficient (plus a bonus if the
diagnosis is then correct) or when the step cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import decision as decision_mod
from . import diagnosis as diagnosis_mod
from .embedding import EmbeddingTable
from .graph import KnowledgeGraph, PatientCase, sample_patient_case

TERMINATED_SUFFICIENT = "sufficiency"
TERMINATED_STEP_CAP = "step_cap"


@dataclass
class Observation:
    """Concatenation of three k-sums: asked actions, implicated diseases,
    their other symptoms. Length 3k."""

    vec: np.ndarray


@dataclass
class EpisodeState:
    case: PatientCase
    asked: list[int] = field(default_factory=list)
    confirmed: list[int] = field(default_factory=list)
    step: int = 0
    done: bool = False
    # incremental caches mirroring the pure build_observation parts
    _asked_set: set = field(default_factory=set, repr=False)
    _confirmed_set: set = field(default_factory=set, repr=False)
    _part1: np.ndarray | None = field(default=None, repr=False)
    _part2_set: set = field(default_factory=set, repr=False)
    _part2: np.ndarray | None = field(default=None, repr=False)
    _related_set: set = field(default_factory=set, repr=False)
    _related: np.ndarray | None = field(default=None, repr=False)
    _asked_overlap: np.ndarray | None = field(default=None, repr=False)
    _evidence: np.ndarray | None = field(default=None, repr=False)
    _suff: float = field(default=0.0, repr=False)
    _suff_at: int = field(default=0, repr=False)


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    bonus: float = 0.0
    terminated_by: str | None = None
    diagnosis_correct: bool | None = None


def build_observation(
    graph: KnowledgeGraph, tab: EmbeddingTable, asked, confirmed
) -> Observation:
    """Pure three-part observation from the asked and confirmed symptom sets.

    part1 sums every asked symptom (confirmed or denied), part2 sums the
    diseases adjacent to confirmed symptoms, part3 sums those diseases'
    other symptoms minus everything already asked. Empty parts are zero.
    """
    k = tab.k
    asked = set(int(a) for a in asked)
    confirmed = set(int(c) for c in confirmed)
    part1 = np.zeros(k)
    if asked:
        part1 = tab.entity_vecs[np.array(sorted(asked))].sum(axis=0)
    diseases: set[int] = set()
    for s in confirmed:
        diseases.update(int(d) for d in graph.diseases_of(s))
    part2 = np.zeros(k)
    if diseases:
        part2 = tab.entity_vecs[np.array(sorted(diseases))].sum(axis=0)
    related: set[int] = set()
    for d in diseases:
        related.update(int(s) for s in graph.symptoms_of(d))
    related -= asked
    part3 = np.zeros(k)
    if related:
        part3 = tab.entity_vecs[np.array(sorted(related))].sum(axis=0)
    return Observation(vec=np.concatenate([part1, part2, part3]))


class ConsultEnv:
    """Episode driver binding a graph, embeddings and the two judge networks.

    `decision` may be a DecisionModel or a callable(evidence_vec) -> float;
    `diagnosis` a DiagnosisModel or a callable(evidence_vec) -> disease id.
    Callables make the reward machinery easy to stub in tests.
    """

    def __init__(
        self,
        graph: KnowledgeGraph,
        tab: EmbeddingTable,
        diagnosis,
        decision,
        drop_prob: float = 0.1,
        max_steps: int = 30,
        terminal_bonus: float = 5.0,
        threshold: float | None = None,
    ):
        self.graph = graph
        self.tab = tab
        self.drop_prob = drop_prob
        self.max_steps = max_steps
        self.terminal_bonus = terminal_bonus

        if isinstance(decision, decision_mod.DecisionModel):
            self._sufficiency = lambda vec: decision_mod.sufficiency(decision, vec)
            self.threshold = decision.threshold if threshold is None else threshold
        else:
            self._sufficiency = decision
            self.threshold = 0.5 if threshold is None else threshold
        if isinstance(diagnosis, diagnosis_mod.DiagnosisModel):
            self._top1 = lambda vec: diagnosis_mod.top1(diagnosis, vec)
        else:
            self._top1 = diagnosis

        self._symptom_set = set(int(s) for s in graph.symptom_ids)
        self._k = tab.k

    def reset(self, rng: np.random.Generator) -> tuple[EpisodeState, Observation]:
        """Sample a fresh patient case; the initial observation is all zeros."""
        case = sample_patient_case(self.graph, rng, self.drop_prob)
        k = self._k
        state = EpisodeState(
            case=case,
            _part1=np.zeros(k),
            _part2=np.zeros(k),
            _related=np.zeros(k),
            _asked_overlap=np.zeros(k),
            _evidence=np.zeros(k),
        )
        return state, self._observation(state)

    def _observation(self, state: EpisodeState) -> Observation:
        return Observation(
            vec=np.concatenate(
                [state._part1, state._part2, state._related - state._asked_overlap]
            )
        )

    def _register_ask(self, state: EpisodeState, action: int, present: bool) -> None:
        if action in state._asked_set:
            return  # repeats self-penalize via the reward; asked stays a set
        vec = self.tab.entity_vecs[action]
        state.asked.append(action)
        state._asked_set.add(action)
        state._part1 = state._part1 + vec
        if action in state._related_set:
            state._asked_overlap = state._asked_overlap + vec
        if not present:
            return
        state.confirmed.append(action)
        state._confirmed_set.add(action)
        for d in self.graph.diseases_of(action):
            d = int(d)
            if d in state._part2_set:
                continue
            state._part2_set.add(d)
            state._part2 = state._part2 + self.tab.entity_vecs[d]
            for s in self.graph.symptoms_of(d):
                s = int(s)
                if s in state._related_set:
                    continue
                state._related_set.add(s)
                svec = self.tab.entity_vecs[s]
                state._related = state._related + svec
                if s in state._asked_set:
                    state._asked_overlap = state._asked_overlap + svec

    def step(self, state: EpisodeState, action: int) -> StepResult:
        """Ask one symptom; returns the next observation, reward and done flag."""
        if state.done:
            raise RuntimeError("step() called on a finished episode")
        action = int(action)
        if action not in self._symptom_set:
            raise ValueError(f"action {action} is not a symptom id")

        fresh_hit = action in state.case.present_symptoms and action not in state._asked_set
        reward = 1.0 if fresh_hit else -1.0
        self._register_ask(state, action, action in state.case.present_symptoms)
        state.step += 1

        bonus = 0.0
        terminated_by = None
        diagnosis_correct = None
        if state.confirmed and len(state.confirmed) != state._suff_at:
            # sufficiency is a pure function of the confirmed set, so only
            # re-evaluate when a new symptom was confirmed; sorted summation
            # keeps the vector identical for the same set
            ids = np.sort(np.asarray(state.confirmed, dtype=np.int64))
            state._evidence = self.tab.entity_vecs[ids].sum(axis=0)
            state._suff = self._sufficiency(state._evidence)
            state._suff_at = len(state.confirmed)
        if state.confirmed and state._suff >= self.threshold:
            state.done = True
            terminated_by = TERMINATED_SUFFICIENT
            diagnosis_correct = self._top1(state._evidence) == state.case.disease
            if diagnosis_correct:
                bonus = self.terminal_bonus
        elif state.step >= self.max_steps:
            state.done = True
            terminated_by = TERMINATED_STEP_CAP

        return StepResult(
            observation=self._observation(state),
            reward=reward + bonus,
            done=state.done,
            bonus=bonus,
            terminated_by=terminated_by,
            diagnosis_correct=diagnosis_correct,
        )
