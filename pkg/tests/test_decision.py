import numpy as np
import pytest

from kgconsult import nn
from kgconsult.decision import (
    DecisionConfig,
    DecisionModel,
    TrainingError,
    init_decision,
    label_sample,
    sufficiency,
    train_decision,
)
from kgconsult.diagnosis import DiagnosisModel
from kgconsult.embedding import TranseConfig, init_embeddings
from kgconsult.graph import PatientCase, generate_synthetic_graph


@pytest.fixture(scope="module")
def small_graph():
    return generate_synthetic_graph(8, 20, (3, 5), 0.3, 5)


@pytest.fixture(scope="module")
def small_tab(small_graph):
    cfg = TranseConfig(k=16, seed=5)
    return init_embeddings(small_graph.n_entities, small_graph.n_relations, cfg,
                           np.random.default_rng(5))


def rigged_diagnosis(graph, k, winner_position):
    """Zero net whose output bias always puts one disease on top."""
    b2 = np.zeros(graph.n_diseases)
    b2[winner_position] = 5.0
    net = nn.Mlp3(
        W1=np.zeros((k, 4)), b1=np.zeros(4),
        W2=np.zeros((4, graph.n_diseases)), b2=b2,
        head=nn.SOFTMAX,
    )
    return DiagnosisModel(net=net, disease_ids=graph.disease_ids.copy())


class TestLabelSample:
    def test_positive_when_top1_matches(self, small_graph, small_tab):
        d = int(small_graph.disease_ids[3])
        diag = rigged_diagnosis(small_graph, small_tab.k, 3)
        case = PatientCase(d, frozenset({int(small_graph.symptoms_of(d)[0])}),
                           frozenset(int(s) for s in small_graph.symptoms_of(d)))
        evidence = sorted(case.present_symptoms)
        assert label_sample(diag, case, evidence, small_tab, small_graph) == 1

    def test_negative_when_top1_differs(self, small_graph, small_tab):
        d = int(small_graph.disease_ids[3])
        diag = rigged_diagnosis(small_graph, small_tab.k, 0)  # always names disease 0
        case = PatientCase(d, frozenset({int(small_graph.symptoms_of(d)[0])}),
                           frozenset(int(s) for s in small_graph.symptoms_of(d)))
        assert label_sample(diag, case, sorted(case.present_symptoms), small_tab, small_graph) == 0

    def test_empty_evidence_rejected(self, small_graph, small_tab):
        diag = rigged_diagnosis(small_graph, small_tab.k, 0)
        case = PatientCase(0, frozenset({9}), frozenset({9}))
        with pytest.raises(ValueError, match="empty"):
            label_sample(diag, case, [], small_tab, small_graph)

    def test_labels_deterministic(self, small_graph, small_tab):
        diag = rigged_diagnosis(small_graph, small_tab.k, 2)
        d = int(small_graph.disease_ids[2])
        case = PatientCase(d, frozenset({int(small_graph.symptoms_of(d)[0])}),
                           frozenset(int(s) for s in small_graph.symptoms_of(d)))
        ev = sorted(case.present_symptoms)
        labels = {label_sample(diag, case, ev, small_tab, small_graph) for _ in range(5)}
        assert labels == {1}


class TestSufficiency:
    def test_zero_weight_model_half(self, small_tab):
        net = nn.Mlp3(
            W1=np.zeros((small_tab.k, 4)), b1=np.zeros(4),
            W2=np.zeros((4, 1)), b2=np.zeros(1), head=nn.SIGMOID,
        )
        model = DecisionModel(net=net)
        assert sufficiency(model, np.ones(small_tab.k)) == pytest.approx(0.5)

    def test_output_in_open_interval(self, small_tab):
        rng = np.random.default_rng(11)
        model = init_decision(small_tab.k, DecisionConfig(hidden=8), rng)
        for _ in range(50):
            p = sufficiency(model, rng.normal(size=small_tab.k) * 10)
            assert 0.0 < p < 1.0

    def test_untrained_outputs_near_half(self):
        # at the real width (512) an initialized net stays close to 0.5 on
        # evidence-scale inputs
        rng = np.random.default_rng(12)
        model = init_decision(512, DecisionConfig(hidden=256), rng)
        bound = 6.0 / np.sqrt(512.0)
        for _ in range(20):
            x = rng.uniform(-bound, bound, size=(6, 512)).sum(axis=0)
            p = sufficiency(model, x)
            assert abs(p - 0.5) < 0.2

    def test_zero_epochs_returns_init(self, small_graph, small_tab):
        cfg = DecisionConfig(epochs=0, hidden=8, seed=12)
        diag = rigged_diagnosis(small_graph, small_tab.k, 0)
        model, trace = train_decision(small_graph, small_tab, diag, cfg)
        assert trace == []
        fresh = init_decision(small_tab.k, cfg, np.random.default_rng(12))
        assert np.array_equal(model.net.W1, fresh.net.W1)


class TestTrainDecision:
    def test_degenerate_labels_abort(self, small_graph, small_tab):
        # an always-wrong stub: its id table names entities that are not
        # diseases, so no label can ever be positive
        base = rigged_diagnosis(small_graph, small_tab.k, 0)
        never_ids = np.full(small_graph.n_diseases, -1, dtype=np.int64)
        diag = DiagnosisModel(net=base.net, disease_ids=never_ids)
        cfg = DecisionConfig(epochs=30, batch=30, hidden=8, seed=13,
                             max_degenerate_epochs=10)
        with pytest.raises(TrainingError, match="degenerate"):
            train_decision(small_graph, small_tab, diag, cfg)

    def test_learns_separable_labels(self, small_graph, small_tab):
        # labels from a real separating rule (many symptoms -> sufficient)
        # emerge when the diagnosis stub is right iff evidence is big; here
        # we rig top1 to disease 0 so positives are exactly disease-0 cases
        diag = rigged_diagnosis(small_graph, small_tab.k, 0)
        cfg = DecisionConfig(epochs=120, batch=60, hidden=16, lr=0.05, seed=14)
        model, trace = train_decision(small_graph, small_tab, diag, cfg)
        assert trace[-1] < trace[0]

    def test_deterministic(self, small_graph, small_tab):
        diag = rigged_diagnosis(small_graph, small_tab.k, 0)
        cfg = DecisionConfig(epochs=10, batch=20, hidden=8, seed=15)
        a, _ = train_decision(small_graph, small_tab, diag, cfg)
        b, _ = train_decision(small_graph, small_tab, diag, cfg)
        assert np.array_equal(a.net.W1, b.net.W1)

    def test_bce_pipeline_gradient(self, small_tab):
        rng = np.random.default_rng(16)
        model = init_decision(small_tab.k, DecisionConfig(hidden=6), rng)
        x = rng.normal(size=small_tab.k)
        y = 1

        def loss_fn():
            out, _ = nn.forward(model.net, x)
            return nn.binary_cross_entropy(float(out[0]), y)

        out, cache = nn.forward(model.net, x)
        grads = nn.backward(model.net, cache, out - y)
        err = nn.finite_diff_check(loss_fn, model.net.params(), grads.params())
        assert err < 1e-6

    def test_threshold_carried_on_model(self, small_tab):
        model = init_decision(small_tab.k, DecisionConfig(hidden=4, threshold=0.7),
                              np.random.default_rng(17))
        assert model.threshold == 0.7
