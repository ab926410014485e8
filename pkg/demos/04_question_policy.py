"""Train the question-asking policy with teacher-shaped REINFORCE.

Uses a short run so the demo finishes quickly; the reward curve lands in
reward_curve_demo.csv. Run:  python3 demos/04_question_policy.py
"""

import numpy as np

from kgconsult.actor import ActorTrainConfig, train_actor, write_reward_curve
from kgconsult.decision import DecisionConfig, train_decision
from kgconsult.diagnosis import DiagnosisConfig, train_diagnosis
from kgconsult.embedding import TranseConfig, train_transe
from kgconsult.graph import generate_synthetic_graph

graph = generate_synthetic_graph(50, 120, (4, 8), overlap=0.25, seed=42)
print("pre-training the upstream models ...")
tab, _ = train_transe(graph, TranseConfig(seed=7))
diag, _ = train_diagnosis(graph, tab, DiagnosisConfig(seed=11))
dec, _ = train_decision(graph, tab, diag, DecisionConfig(seed=13, threshold=0.9))

cfg = ActorTrainConfig(
    total_episodes=4000,  # demo length; the acceptance run uses 20000
    lr=3e-4,
    capacity=500,
    baseline=True,
    seed=21,
    watchdog_fraction=None,
)
print(f"collecting and training over {cfg.total_episodes} episodes ...")
actor, history = train_actor(graph, tab, diag, dec, cfg)

first = np.mean([h.ret for h in history[:500]])
last = np.mean([h.ret for h in history[-500:]])
print(f"mean return: first 500 episodes {first:+.2f}, last 500 {last:+.2f}")
print(f"teacher-forcing rate decayed to {history[-1].shaping_rate:.3f}")

write_reward_curve(history, "reward_curve_demo.csv")
print("wrote reward_curve_demo.csv (episode,return,shaping_rate)")
