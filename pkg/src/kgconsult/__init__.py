"""Knowledge-graph consultation models: embeddings, diagnosis, question policy."""

from .graph import (
    KnowledgeGraph,
    PatientCase,
    Triple,
    corrupt_triple,
    generate_synthetic_graph,
    load_graph,
    neighbors_within_depth,
    sample_patient_case,
    save_graph,
)

__all__ = [
    "KnowledgeGraph",
    "PatientCase",
    "Triple",
    "corrupt_triple",
    "generate_synthetic_graph",
    "load_graph",
    "neighbors_within_depth",
    "sample_patient_case",
    "save_graph",
]

__version__ = "0.1.0"
