"""Train translation embeddings and watch real edges separate from fakes.

Run:  python3 demos/02_translation_embeddings.py     (about half a minute)
"""

import numpy as np

from kgconsult.embedding import (
    TranseConfig,
    filtered_tail_ranks,
    held_out_pairs,
    init_embeddings,
    score_triple,
    train_transe,
)
from kgconsult.graph import generate_synthetic_graph

graph = generate_synthetic_graph(50, 120, (4, 8), overlap=0.25, seed=42)

cfg = TranseConfig(k=512, gamma=1.0, rounds=1000, batch=500, lr=0.01, seed=7)
print(f"training {cfg.rounds} rounds x {cfg.batch} sampled pairs, k={cfg.k} ...")
tab, trace = train_transe(graph, cfg)
print(f"mean pair loss: {trace.round_losses[0]:.4f} (round 1) -> "
      f"{trace.round_losses[-1]:.4f} (round {cfg.rounds})")

# held-out check: a real triple should score below its corruption
rng = np.random.default_rng(123)
pairs = held_out_pairs(graph, 500, rng)
wins = sum(
    score_triple(tab, p.head, p.relation, p.tail)
    < score_triple(tab, n.head, n.relation, n.tail)
    for p, n in pairs
)
print(f"separation: {wins}/500 positive/corrupted pairs ordered correctly")

# filtered ranking of the true tail among all entities
ranks = filtered_tail_ranks(tab, graph, list(graph.triples))
untrained = init_embeddings(graph.n_entities, graph.n_relations, cfg,
                            np.random.default_rng(cfg.seed))
ranks0 = filtered_tail_ranks(untrained, graph, list(graph.triples))
print(f"filtered mean rank: {ranks.mean():.2f} trained vs {ranks0.mean():.2f} untrained")
