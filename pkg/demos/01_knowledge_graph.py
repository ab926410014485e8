"""Build, save and query a synthetic symptom/disease graph.

Run from the repository root:  python3 demos/01_knowledge_graph.py
"""

import tempfile

import numpy as np

from kgconsult.graph import (
    generate_synthetic_graph,
    load_graph,
    neighbors_within_depth,
    sample_patient_case,
    save_graph,
)

# a desk-size graph: 50 diseases, 120 symptoms, 4..8 symptoms per disease
graph = generate_synthetic_graph(50, 120, (4, 8), overlap=0.25, seed=42)
print(f"{graph.n_diseases} diseases, {graph.n_symptoms} symptoms, "
      f"{len(graph.triples)} edges")
print("fingerprint:", graph.fingerprint()[:16], "...")

# round trip through the TSV format
with tempfile.TemporaryDirectory() as tmp:
    entities_path, triples_path = save_graph(graph, tmp)
    again = load_graph(entities_path, triples_path)
    assert again.fingerprint() == graph.fingerprint()
    print("TSV round trip: identical fingerprint")

# adjacency queries
d0 = int(graph.disease_ids[0])
print(f"\nsymptoms of {graph.name(d0)}: "
      f"{[graph.name(int(s)) for s in graph.symptoms_of(d0)]}")

# two-hop neighborhood: the disease's symptoms, then diseases sharing them
reached = neighbors_within_depth(graph, d0, 2)
at_depth_2 = [e for e, path in reached if len(path) == 2]
print(f"entities within 2 hops: {len(reached)} "
      f"(of which {len(at_depth_2)} at depth 2)")

# simulated patients: the disease's symptoms minus random dropout
rng = np.random.default_rng(7)
case = sample_patient_case(graph, rng, drop_prob=0.1)
print(f"\nsampled case: {graph.name(case.disease)}")
print(f"  full symptom set: {sorted(case.full_symptoms)}")
print(f"  reported (post-dropout): {sorted(case.present_symptoms)}")
