import numpy as np
import pytest

from kgconsult import nn
from kgconsult.actor import ActorModel
from kgconsult.consultation import (
    ASKING,
    CONCLUDED,
    ConsultationEngine,
    ConsultationError,
    NotPendingError,
    SessionConcludedError,
    UnknownSymptomError,
)
from kgconsult.decision import DecisionModel
from kgconsult.diagnosis import DiagnosisModel
from kgconsult.embedding import TranseConfig, init_embeddings
from kgconsult.graph import DISEASE, SYMPTOM, Entity, KnowledgeGraph, Triple, generate_synthetic_graph


def sigmoid_stub(k, always: bool):
    """Decision net with a giant output bias: always or never sufficient."""
    b2 = np.array([40.0 if always else -40.0])
    net = nn.Mlp3(W1=np.zeros((k, 2)), b1=np.zeros(2), W2=np.zeros((2, 1)), b2=b2,
                  head=nn.SIGMOID)
    return DecisionModel(net=net)


def uniform_diagnosis(graph, k):
    net = nn.Mlp3(
        W1=np.zeros((k, 2)), b1=np.zeros(2),
        W2=np.zeros((2, graph.n_diseases)), b2=np.zeros(graph.n_diseases),
        head=nn.SOFTMAX,
    )
    return DiagnosisModel(net=net, disease_ids=graph.disease_ids.copy())


def seeded_actor(graph, k, seed=0):
    net = nn.init_mlp3(3 * k, 8, graph.n_symptoms, nn.SOFTMAX,
                       np.random.default_rng(seed))
    return ActorModel(net=net, symptom_ids=graph.symptom_ids.copy())


@pytest.fixture(scope="module")
def small_graph():
    return generate_synthetic_graph(8, 20, (3, 5), 0.3, 5)


@pytest.fixture(scope="module")
def small_tab(small_graph):
    return init_embeddings(small_graph.n_entities, 1, TranseConfig(k=16, seed=5),
                           np.random.default_rng(5))


def make_engine(graph, tab, sufficient=False, max_questions=30, seed=0):
    return ConsultationEngine(
        graph, tab,
        uniform_diagnosis(graph, tab.k),
        sigmoid_stub(tab.k, sufficient),
        seeded_actor(graph, tab.k, seed),
        max_questions=max_questions,
    )


class TestStartSession:
    def test_never_sufficient_starts_asking(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, sufficient=False)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        assert s.status == ASKING
        assert s.pending_question is not None
        assert s.pending_question != int(small_graph.symptom_ids[0])

    def test_immediately_sufficient_concludes(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, sufficient=True)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        assert s.status == CONCLUDED
        assert s.pending_question is None
        probs = [p for _, p in s.diagnosis]
        assert probs == sorted(probs, reverse=True)
        assert len(s.diagnosis) == small_graph.n_diseases

    def test_unknown_symptom_named_in_error(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab)
        with pytest.raises(UnknownSymptomError, match="99999"):
            engine.start_session([99999])

    def test_disease_id_rejected(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab)
        with pytest.raises(UnknownSymptomError):
            engine.start_session([int(small_graph.disease_ids[0])])

    def test_empty_initial_rejected(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab)
        with pytest.raises(ConsultationError, match="empty"):
            engine.start_session([])

    def test_duplicates_deduped(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab)
        s0 = int(small_graph.symptom_ids[0])
        s = engine.start_session([s0, s0])
        assert s.evidence == [s0]


class TestQuestionLoop:
    def test_never_asks_twice_and_excludes_known(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, max_questions=15)
        rng = np.random.default_rng(1)
        for trial in range(30):
            s = engine.start_session([int(small_graph.symptom_ids[trial % 20])])
            asked = []
            while s.status == ASKING:
                q = s.pending_question
                assert q not in s.evidence
                assert q not in s.denied
                asked.append(q)
                engine.submit_answer(s, q, "yes" if rng.random() < 0.4 else "no")
            assert len(asked) == len(set(asked))

    def test_concludes_at_max_questions(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, max_questions=3)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        answers = 0
        while s.status == ASKING:
            engine.submit_answer(s, s.pending_question, "no")
            answers += 1
        assert answers == 3
        assert s.question_count == 3
        assert s.status == CONCLUDED
        assert s.diagnosis is not None

    def test_symptom_exhaustion_forces_conclusion(self):
        entities = [Entity(0, "D0", DISEASE), Entity(1, "S0", SYMPTOM),
                    Entity(2, "S1", SYMPTOM)]
        g = KnowledgeGraph(entities, ["has"], [Triple(1, 0, 0), Triple(2, 0, 0)])
        tab = init_embeddings(3, 1, TranseConfig(k=8, seed=2), np.random.default_rng(2))
        engine = make_engine(g, tab, max_questions=30)
        s = engine.start_session([1])
        assert s.pending_question == 2  # the only unasked symptom
        engine.submit_answer(s, 2, "no")
        assert s.status == CONCLUDED  # nothing left to ask

    def test_answer_validation(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        q = s.pending_question
        with pytest.raises(ConsultationError, match="answer"):
            engine.submit_answer(s, q, "maybe")
        other = next(int(x) for x in small_graph.symptom_ids if int(x) != q)
        with pytest.raises(NotPendingError):
            engine.submit_answer(s, other, "yes")

    def test_answer_after_concluded_rejected(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, sufficient=True)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        assert s.status == CONCLUDED
        with pytest.raises(SessionConcludedError):
            engine.submit_answer(s, int(small_graph.symptom_ids[1]), "yes")

    def test_yes_goes_to_evidence_no_to_denied(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, max_questions=4)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        first_q = s.pending_question
        engine.submit_answer(s, first_q, "yes")
        assert first_q in s.evidence
        second_q = s.pending_question
        engine.submit_answer(s, second_q, "no")
        assert second_q in s.denied
        assert set(s.evidence) & set(s.denied) == set()
        assert s.history == [(first_q, "yes"), (second_q, "no")]


class TestDeterminism:
    def test_replay_reproduces_transcript(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, max_questions=10, seed=3)
        rng = np.random.default_rng(4)

        def drive(initial, answers=None):
            s = engine.start_session(initial)
            script = []
            i = 0
            while s.status == ASKING:
                q = s.pending_question
                a = answers[i] if answers else ("yes" if rng.random() < 0.5 else "no")
                engine.submit_answer(s, q, a)
                script.append((q, a))
                i += 1
            return s, script

        initial = [int(small_graph.symptom_ids[2])]
        s1, script = drive(initial)
        s2, _ = drive(initial, answers=[a for _, a in script])
        assert [q for q, _ in s2.history] == [q for q, _ in s1.history]
        assert s2.diagnosis == s1.diagnosis

    def test_status_never_leaves_concluded(self, small_graph, small_tab):
        engine = make_engine(small_graph, small_tab, sufficient=True)
        s = engine.start_session([int(small_graph.symptom_ids[0])])
        with pytest.raises(SessionConcludedError):
            engine.next_question(s)
