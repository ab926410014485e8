"""Measure top-k hit rates and question counts over sampled consultations.

Compares the trained question policy against a uniform-random questioner
at the same average question budget.
Run:  python3 demos/06_evaluation.py
"""

import json

from kgconsult.actor import ActorTrainConfig, train_actor
from kgconsult.consultation import ConsultationEngine
from kgconsult.decision import DecisionConfig, train_decision
from kgconsult.diagnosis import DiagnosisConfig, train_diagnosis
from kgconsult.embedding import TranseConfig, train_transe
from kgconsult.evaluation import evaluate, random_policy_baseline
from kgconsult.graph import generate_synthetic_graph

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
report = evaluate(engine, graph, n_samples=500, drop_prob=0.1, seed=1000)
print(f"\ntrained policy: top1 {report.top1:.3f}  top3 {report.top3:.3f}  "
      f"top5 {report.top5:.3f}  avg questions {report.avg_questions:.1f}")

budget = round(report.avg_questions)
base = random_policy_baseline(engine, graph, 500, budget, drop_prob=0.1, seed=1001)
print(f"random @ {budget} questions: top1 {base.top1:.3f}  top5 {base.top5:.3f}")
print(f"top-1 gap over random: {report.top1 - base.top1:+.3f}")

with open("eval_report_demo.json", "w") as fh:
    json.dump(report.to_json(), fh, indent=2)
print("\nwrote eval_report_demo.json (header records the paper-scale reference)")
