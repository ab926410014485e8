"""Shared desk-scale training fixtures for the acceptance suite.

Heavy artifacts (the 50x120 graph and the four trained models) build once
per session; every seed is pinned so reruns are bit-identical.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kgconsult.actor import ActorTrainConfig, train_actor
from kgconsult.bundle import ModelBundle
from kgconsult.decision import DecisionConfig, train_decision
from kgconsult.diagnosis import DiagnosisConfig, train_diagnosis
from kgconsult.embedding import TranseConfig, train_transe
from kgconsult.graph import generate_synthetic_graph

DESK_SEED = 42
TRANSE_SEED = 7
DIAGNOSIS_SEED = 11
DECISION_SEED = 13
ACTOR_SEED = 21

# consultation stopping confidence; 0.5 stops too eagerly (the first noisy
# crossing ends the session), 0.9 trades ~4 more questions for accuracy
DECISION_THRESHOLD = 0.9

ACTOR_ACCEPT = dict(
    total_episodes=20000,
    lr=3e-4,
    capacity=500,
    baseline=True,
    seed=ACTOR_SEED,
)


@pytest.fixture(scope="session")
def desk_graph():
    return generate_synthetic_graph(50, 120, (4, 8), 0.25, DESK_SEED)


@pytest.fixture(scope="session")
def desk_embeddings(desk_graph):
    tab, trace = train_transe(desk_graph, TranseConfig(seed=TRANSE_SEED))
    return tab, trace


@pytest.fixture(scope="session")
def desk_diagnosis(desk_graph, desk_embeddings):
    tab, _ = desk_embeddings
    model, trace = train_diagnosis(desk_graph, tab, DiagnosisConfig(seed=DIAGNOSIS_SEED))
    return model, trace


@pytest.fixture(scope="session")
def desk_decision(desk_graph, desk_embeddings, desk_diagnosis):
    tab, _ = desk_embeddings
    diag, _ = desk_diagnosis
    model, trace = train_decision(
        desk_graph, tab, diag,
        DecisionConfig(seed=DECISION_SEED, threshold=DECISION_THRESHOLD),
    )
    return model, trace


@pytest.fixture(scope="session")
def desk_actor(desk_graph, desk_embeddings, desk_diagnosis, desk_decision):
    tab, _ = desk_embeddings
    diag, _ = desk_diagnosis
    dec, _ = desk_decision
    actor, history = train_actor(
        desk_graph, tab, diag, dec, ActorTrainConfig(**ACTOR_ACCEPT)
    )
    return actor, history


@pytest.fixture(scope="session")
def desk_bundle(desk_graph, desk_embeddings, desk_diagnosis, desk_decision, desk_actor):
    tab, _ = desk_embeddings
    diag, _ = desk_diagnosis
    dec, _ = desk_decision
    actor, _ = desk_actor
    return ModelBundle(
        graph_fingerprint=desk_graph.fingerprint(),
        embeddings=tab,
        diagnosis=diag,
        decision=dec,
        actor=actor,
        configs={"actor": dict(ACTOR_ACCEPT)},
    )
