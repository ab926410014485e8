import numpy as np
import pytest

from kgconsult.embedding import EmbeddingTable, TranseConfig, init_embeddings
from kgconsult.environment import (
    TERMINATED_STEP_CAP,
    TERMINATED_SUFFICIENT,
    ConsultEnv,
    build_observation,
)
from kgconsult.graph import (
    DISEASE,
    SYMPTOM,
    Entity,
    KnowledgeGraph,
    Triple,
    generate_synthetic_graph,
)

NEVER = lambda vec: 0.0
ALWAYS = lambda vec: 1.0


def minimal_graph():
    entities = [Entity(0, "D0", DISEASE), Entity(1, "S0", SYMPTOM)]
    return KnowledgeGraph(entities, ["has"], [Triple(1, 0, 0)])


@pytest.fixture(scope="module")
def small_graph():
    return generate_synthetic_graph(8, 20, (3, 5), 0.3, 5)


@pytest.fixture(scope="module")
def small_tab(small_graph):
    cfg = TranseConfig(k=16, seed=5)
    return init_embeddings(small_graph.n_entities, small_graph.n_relations, cfg,
                           np.random.default_rng(5))


def stub_env(graph, tab, decision=NEVER, diagnosis=None, **kw):
    if diagnosis is None:
        diagnosis = lambda vec: -1  # never correct
    return ConsultEnv(graph, tab, diagnosis, decision, **kw)


class TestReset:
    def test_initial_state(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab)
        state, obs = env.reset(np.random.default_rng(0))
        assert state.step == 0
        assert state.confirmed == []
        assert not state.done
        assert obs.vec.shape == (3 * small_tab.k,)
        assert not obs.vec.any()

    def test_same_seed_same_case(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab)
        s1, o1 = env.reset(np.random.default_rng(9))
        s2, o2 = env.reset(np.random.default_rng(9))
        assert s1.case == s2.case
        assert np.array_equal(o1.vec, o2.vec)


class TestBuildObservation:
    def test_empty_is_zero(self, small_graph, small_tab):
        obs = build_observation(small_graph, small_tab, [], [])
        assert obs.vec.shape == (3 * small_tab.k,)
        assert not obs.vec.any()

    def test_minimal_graph_parts(self):
        g = minimal_graph()
        rng = np.random.default_rng(1)
        tab = EmbeddingTable(rng.normal(size=(2, 4)), rng.normal(size=(1, 4)))
        obs = build_observation(g, tab, [1], [1])
        np.testing.assert_array_equal(obs.vec[:4], tab.entity_vecs[1])   # asked S0
        np.testing.assert_array_equal(obs.vec[4:8], tab.entity_vecs[0])  # implicated D0
        assert not obs.vec[8:].any()  # no other symptoms

    def test_denied_feed_part1_only(self, small_graph, small_tab):
        s = int(small_graph.symptom_ids[0])
        obs = build_observation(small_graph, small_tab, [s], [])
        np.testing.assert_array_equal(obs.vec[: small_tab.k], small_tab.entity_vecs[s])
        assert not obs.vec[small_tab.k :].any()

    def test_pure_function_of_sets(self, small_graph, small_tab):
        asked = [int(s) for s in small_graph.symptom_ids[:4]]
        confirmed = asked[:2]
        a = build_observation(small_graph, small_tab, asked, confirmed)
        b = build_observation(small_graph, small_tab, list(reversed(asked)),
                              list(reversed(confirmed)))
        np.testing.assert_array_equal(a.vec, b.vec)

    def test_part3_excludes_asked(self, small_graph, small_tab):
        # independent set-enumeration oracle
        rng = np.random.default_rng(3)
        symptoms = [int(s) for s in small_graph.symptom_ids]
        asked = list(rng.choice(symptoms, size=3, replace=False))
        confirmed = asked[:2]
        obs = build_observation(small_graph, small_tab, asked, confirmed)

        diseases = sorted({int(d) for s in confirmed for d in small_graph.diseases_of(s)})
        related = sorted(
            {int(x) for d in diseases for x in small_graph.symptoms_of(d)} - set(asked)
        )
        k = small_tab.k
        expected2 = small_tab.entity_vecs[diseases].sum(axis=0) if diseases else np.zeros(k)
        expected3 = small_tab.entity_vecs[related].sum(axis=0) if related else np.zeros(k)
        np.testing.assert_allclose(obs.vec[k : 2 * k], expected2, atol=1e-12)
        np.testing.assert_allclose(obs.vec[2 * k :], expected3, atol=1e-12)


class TestStep:
    def test_fresh_present_symptom_rewards_plus_one(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab)
        state, _ = env.reset(np.random.default_rng(4))
        present = sorted(state.case.present_symptoms)[0]
        result = env.step(state, present)
        assert result.reward == 1.0

    def test_repeat_ask_rewards_minus_one(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab)
        state, _ = env.reset(np.random.default_rng(4))
        present = sorted(state.case.present_symptoms)[0]
        env.step(state, present)
        result = env.step(state, present)
        assert result.reward == -1.0

    def test_absent_symptom_rewards_minus_one(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab)
        state, _ = env.reset(np.random.default_rng(4))
        absent = next(
            int(s) for s in small_graph.symptom_ids
            if int(s) not in state.case.present_symptoms
        )
        result = env.step(state, absent)
        assert result.reward == -1.0

    def test_stubbed_sufficient_terminal_bonus(self):
        g = minimal_graph()
        rng = np.random.default_rng(5)
        tab = EmbeddingTable(rng.normal(size=(2, 4)), rng.normal(size=(1, 4)))
        box = {}
        env = ConsultEnv(g, tab, lambda vec: box["d"], ALWAYS, drop_prob=0.0)
        state, _ = env.reset(np.random.default_rng(6))
        box["d"] = state.case.disease
        result = env.step(state, 1)
        assert result.done
        assert result.terminated_by == TERMINATED_SUFFICIENT
        assert result.bonus == 5.0
        assert result.reward == 6.0  # +1 step, +5 bonus
        assert result.diagnosis_correct is True

    def test_wrong_diagnosis_no_bonus(self):
        g = minimal_graph()
        rng = np.random.default_rng(7)
        tab = EmbeddingTable(rng.normal(size=(2, 4)), rng.normal(size=(1, 4)))
        env = ConsultEnv(g, tab, lambda vec: -1, ALWAYS, drop_prob=0.0)
        state, _ = env.reset(np.random.default_rng(8))
        result = env.step(state, 1)
        assert result.done
        assert result.bonus == 0.0
        assert result.reward == 1.0
        assert result.diagnosis_correct is False

    def test_never_sufficient_runs_to_cap(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab, max_steps=7)
        rng = np.random.default_rng(9)
        for _ in range(20):
            state, _ = env.reset(rng)
            steps = 0
            while not state.done:
                action = int(small_graph.symptom_ids[int(rng.integers(20))])
                result = env.step(state, action)
                steps += 1
            assert steps == 7
            assert result.terminated_by == TERMINATED_STEP_CAP

    def test_step_after_done_raises(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab, max_steps=1)
        state, _ = env.reset(np.random.default_rng(10))
        env.step(state, int(small_graph.symptom_ids[0]))
        with pytest.raises(RuntimeError, match="finished"):
            env.step(state, int(small_graph.symptom_ids[1]))

    def test_non_symptom_action_raises(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab)
        state, _ = env.reset(np.random.default_rng(11))
        with pytest.raises(ValueError, match="not a symptom"):
            env.step(state, int(small_graph.disease_ids[0]))

    def test_reward_accounting_and_termination(self, small_graph, small_tab):
        # sum of step rewards (minus bonus) must equal hits minus misses
        env = stub_env(small_graph, small_tab, decision=lambda v: 0.4, max_steps=12)
        rng = np.random.default_rng(12)
        for _ in range(300):
            state, _ = env.reset(rng)
            total = hits = misses = 0.0
            asked = set()
            while not state.done:
                action = int(small_graph.symptom_ids[int(rng.integers(20))])
                fresh_hit = action in state.case.present_symptoms and action not in asked
                result = env.step(state, action)
                if fresh_hit:
                    hits += 1
                else:
                    misses += 1
                asked.add(action)
                total += result.reward - result.bonus
            assert total == hits - misses
            assert state.step <= 12

    def test_incremental_observation_matches_pure(self, small_graph, small_tab):
        env = stub_env(small_graph, small_tab, max_steps=10)
        rng = np.random.default_rng(13)
        state, obs = env.reset(rng)
        while not state.done:
            action = int(small_graph.symptom_ids[int(rng.integers(20))])
            result = env.step(state, action)
            pure = build_observation(small_graph, small_tab, state.asked, state.confirmed)
            np.testing.assert_allclose(result.observation.vec, pure.vec, atol=1e-9)
