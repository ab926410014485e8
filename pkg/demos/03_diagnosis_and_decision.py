"""Train the disease classifier and the stop-or-continue judge.

Run:  python3 demos/03_diagnosis_and_decision.py     (a few minutes)
"""

import numpy as np

from kgconsult.decision import DecisionConfig, sufficiency, train_decision
from kgconsult.diagnosis import (
    DiagnosisConfig,
    diagnose,
    full_evidence_input,
    top1_batch,
    train_diagnosis,
)
from kgconsult.embedding import TranseConfig, train_transe
from kgconsult.graph import generate_synthetic_graph, sample_patient_case

graph = generate_synthetic_graph(50, 120, (4, 8), overlap=0.25, seed=42)
tab, _ = train_transe(graph, TranseConfig(seed=7))

print("training diagnosis net (1000 epochs x 500 sampled diseases) ...")
diag, trace = train_diagnosis(graph, tab, DiagnosisConfig(seed=11))
print(f"cross-entropy: {trace[0]:.3f} -> {trace[-1]:.4f}")

X = np.stack([full_evidence_input(graph, tab, int(d)) for d in graph.disease_ids])
acc = (top1_batch(diag, X) == graph.disease_ids).mean()
print(f"full-evidence top-1 accuracy: {100 * acc:.1f}%")

print("\ntraining decision net (labels: is the classifier right yet?) ...")
dec, trace = train_decision(graph, tab, diag, DecisionConfig(seed=13, threshold=0.9))
print(f"logistic loss: {trace[0]:.3f} -> {trace[-1]:.3f}")

# one patient, growing evidence: watch the ranking and the stop signal
rng = np.random.default_rng(3)
case = sample_patient_case(graph, rng, drop_prob=0.0)
print(f"\ntrue disease: {graph.name(case.disease)}")
evidence = []
for s in sorted(case.present_symptoms):
    evidence.append(s)
    vec = tab.entity_vecs[np.sort(np.array(evidence))].sum(axis=0)
    ranked = diagnose(diag, vec)
    rank = 1 + [d for d, _ in ranked].index(case.disease)
    stop = sufficiency(dec, vec)
    print(f"  {len(evidence)} symptom(s): true disease at rank {rank:2d}, "
          f"top guess {graph.name(ranked[0][0])!r} p={ranked[0][1]:.2f}, "
          f"sufficiency {stop:.3f}")
    if stop >= dec.threshold:
        print("  decision net: stop and diagnose")
        break
