"""Drive a live consultation session against a simulated truthful patient.

Run:  python3 demos/05_consultation_session.py      (trains small models first)
"""

import numpy as np

from kgconsult.actor import ActorTrainConfig, train_actor
from kgconsult.consultation import CONCLUDED, ConsultationEngine
from kgconsult.decision import DecisionConfig, train_decision
from kgconsult.diagnosis import DiagnosisConfig, train_diagnosis
from kgconsult.embedding import TranseConfig, train_transe
from kgconsult.graph import generate_synthetic_graph, sample_patient_case

graph = generate_synthetic_graph(50, 120, (4, 8), overlap=0.25, seed=42)
print("training the model stack (short actor run for demo speed) ...")
tab, _ = train_transe(graph, TranseConfig(seed=7))
diag, _ = train_diagnosis(graph, tab, DiagnosisConfig(seed=11))
dec, _ = train_decision(graph, tab, diag, DecisionConfig(seed=13, threshold=0.9))
actor, _ = train_actor(
    graph, tab, diag, dec,
    ActorTrainConfig(total_episodes=4000, lr=3e-4, capacity=500, baseline=True,
                     seed=21, watchdog_fraction=None),
)

engine = ConsultationEngine(graph, tab, diag, dec, actor, max_questions=30)

rng = np.random.default_rng(5)
case = sample_patient_case(graph, rng, drop_prob=0.1)
present = sorted(case.present_symptoms)
initial = present[int(rng.integers(len(present)))]
print(f"\nhidden disease: {graph.name(case.disease)}")
print(f"patient volunteers: {graph.name(initial)}")

session = engine.start_session([initial])
while session.status != CONCLUDED:
    q = session.pending_question
    answer = "yes" if q in case.present_symptoms else "no"
    print(f"  q{session.question_count + 1}: {graph.name(q)}? -> {answer}")
    engine.submit_answer(session, q, answer)

print(f"\nconcluded after {session.question_count} questions; top 5:")
for d, p in session.diagnosis[:5]:
    marker = " <-- true disease" if d == case.disease else ""
    print(f"  {graph.name(d)}: {100 * p:.1f}%{marker}")
