"""Bipartite symptom/disease knowledge graph: loading, generation, queries.

Entities carry dense integer ids. Every edge is a (symptom, relation, disease)
triple; the stored direction is always symptom -> disease, but traversal
helpers walk edges both ways and report which way each hop went.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DISEASE = "disease"
SYMPTOM = "symptom"

# Hop directions reported by neighbors_within_depth. FORWARD follows the
# stored symptom->disease orientation, REVERSE walks against it.
FORWARD = 1
REVERSE = -1

ENTITIES_HEADER = "#entities v1"
TRIPLES_HEADER = "#triples v1"


class GraphError(ValueError):
    """Malformed graph files or graph-level invariant violations."""


@dataclass(frozen=True)
class Entity:
    id: int
    name: str
    kind: str


@dataclass(frozen=True)
class Triple:
    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class PatientCase:
    """One simulated patient: a disease plus its retained symptom evidence."""

    disease: int
    present_symptoms: frozenset[int]
    full_symptoms: frozenset[int]


class KnowledgeGraph:
    """Immutable graph over disease and symptom entities.

    Adjacency is precomputed in both directions so traversal and observation
    building stay cheap; instances are safe to share across threads.
    """

    def __init__(self, entities: list[Entity], relations: list[str], triples: list[Triple]):
        self.entities = tuple(entities)
        self.relations = tuple(relations)
        self.triples = tuple(triples)
        self.triple_set = frozenset(triples)
        self.triple_tuples = frozenset((t.head, t.relation, t.tail) for t in triples)
        self._validate()

        self.disease_ids = np.array(
            sorted(e.id for e in self.entities if e.kind == DISEASE), dtype=np.int64
        )
        self.symptom_ids = np.array(
            sorted(e.id for e in self.entities if e.kind == SYMPTOM), dtype=np.int64
        )

        # symptom -> diseases it points at, disease -> symptoms pointing at it
        out_adj: dict[int, set[int]] = {e.id: set() for e in self.entities}
        in_adj: dict[int, set[int]] = {e.id: set() for e in self.entities}
        for t in self.triples:
            out_adj[t.head].add(t.tail)
            in_adj[t.tail].add(t.head)
        self._out = {k: np.array(sorted(v), dtype=np.int64) for k, v in out_adj.items()}
        self._in = {k: np.array(sorted(v), dtype=np.int64) for k, v in in_adj.items()}
        self._rel_of = {(t.head, t.tail): t.relation for t in self.triples}

        kinds = np.empty(len(self.entities), dtype=object)
        for e in self.entities:
            kinds[e.id] = e.kind
        self._kinds = kinds

    def _validate(self) -> None:
        ids = [e.id for e in self.entities]
        if sorted(ids) != list(range(len(ids))):
            raise GraphError("entity ids must be dense and unique, 0..n-1")
        kind_of = {}
        for e in self.entities:
            if e.kind not in (DISEASE, SYMPTOM):
                raise GraphError(f"entity {e.id} has unknown kind {e.kind!r}")
            kind_of[e.id] = e.kind
        seen = set()
        for t in self.triples:
            if t.head not in kind_of:
                raise GraphError(f"triple references unknown head entity {t.head}")
            if t.tail not in kind_of:
                raise GraphError(f"triple references unknown tail entity {t.tail}")
            if not (0 <= t.relation < len(self.relations)):
                raise GraphError(f"triple references unknown relation {t.relation}")
            if kind_of[t.head] != SYMPTOM or kind_of[t.tail] != DISEASE:
                raise GraphError(
                    f"edge direction violation: ({t.head},{t.relation},{t.tail}) "
                    "must run symptom -> disease"
                )
            key = (t.head, t.relation, t.tail)
            if key in seen:
                raise GraphError(f"duplicate triple ({t.head},{t.relation},{t.tail})")
            seen.add(key)

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def n_diseases(self) -> int:
        return len(self.disease_ids)

    @property
    def n_symptoms(self) -> int:
        return len(self.symptom_ids)

    def kind(self, entity_id: int) -> str:
        return self._kinds[entity_id]

    def name(self, entity_id: int) -> str:
        return self.entities[entity_id].name

    def symptoms_of(self, disease_id: int) -> np.ndarray:
        """Symptom ids adjacent to a disease, ascending."""
        return self._in[disease_id]

    def diseases_of(self, symptom_id: int) -> np.ndarray:
        """Disease ids a symptom points at, ascending."""
        return self._out[symptom_id]

    def canonical_entities_text(self) -> str:
        lines = [ENTITIES_HEADER]
        for e in self.entities:
            lines.append(f"{e.id}\t{e.name}\t{e.kind}")
        return "\n".join(lines) + "\n"

    def canonical_triples_text(self) -> str:
        lines = [TRIPLES_HEADER]
        for t in sorted(self.triples, key=lambda t: (t.head, t.relation, t.tail)):
            lines.append(f"{t.head}\t{self.relations[t.relation]}\t{t.tail}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        """Content hash of the canonical serialization."""
        h = hashlib.sha256()
        h.update(self.canonical_entities_text().encode("utf-8"))
        h.update(self.canonical_triples_text().encode("utf-8"))
        return h.hexdigest()


def load_graph(entities_path: str | Path, triples_path: str | Path) -> KnowledgeGraph:
    """Load and validate a graph from the two TSV files.

    Raises GraphError with the offending line number on malformed input,
    dangling references, direction violations or duplicate triples.
    """
    entities_path = Path(entities_path)
    triples_path = Path(triples_path)

    entities: list[Entity] = []
    lines = entities_path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ENTITIES_HEADER:
        raise GraphError(f"{entities_path}: missing header {ENTITIES_HEADER!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GraphError(f"{entities_path}:{lineno}: expected 3 tab-separated fields")
        raw_id, name, kind = parts
        try:
            eid = int(raw_id)
        except ValueError:
            raise GraphError(f"{entities_path}:{lineno}: id {raw_id!r} is not an integer") from None
        if kind not in (DISEASE, SYMPTOM):
            raise GraphError(f"{entities_path}:{lineno}: kind must be disease or symptom")
        entities.append(Entity(eid, name, kind))

    relations: list[str] = []
    relation_index: dict[str, int] = {}
    triples: list[Triple] = []
    lines = triples_path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != TRIPLES_HEADER:
        raise GraphError(f"{triples_path}: missing header {TRIPLES_HEADER!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GraphError(f"{triples_path}:{lineno}: expected 3 tab-separated fields")
        raw_head, rel_label, raw_tail = parts
        try:
            head, tail = int(raw_head), int(raw_tail)
        except ValueError:
            raise GraphError(f"{triples_path}:{lineno}: entity ids must be integers") from None
        if rel_label not in relation_index:
            relation_index[rel_label] = len(relations)
            relations.append(rel_label)
        triples.append(Triple(head, relation_index[rel_label], tail))

    try:
        return KnowledgeGraph(entities, relations, triples)
    except GraphError as err:
        raise GraphError(f"{entities_path} / {triples_path}: {err}") from None


def save_graph(graph: KnowledgeGraph, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the canonical entities.tsv and triples.tsv into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entities_path = out_dir / "entities.tsv"
    triples_path = out_dir / "triples.tsv"
    entities_path.write_text(graph.canonical_entities_text(), encoding="utf-8", newline="\n")
    triples_path.write_text(graph.canonical_triples_text(), encoding="utf-8", newline="\n")
    return entities_path, triples_path


def generate_synthetic_graph(
    n_diseases: int,
    n_symptoms: int,
    symptoms_per_disease: tuple[int, int],
    overlap: float,
    seed: int,
) -> KnowledgeGraph:
    """Generate a random symptom->disease graph, deterministic per seed.

    Every disease gets between lo and hi symptoms (inclusive); `overlap`
    is the probability that a pick reuses a symptom already attached to
    some other disease. Symptoms left unused at the end are attached to a
    random disease so each symptom has degree >= 1.
    """
    lo, hi = symptoms_per_disease
    if n_diseases < 1:
        raise GraphError("need at least one disease")
    if not (1 <= lo <= hi):
        raise GraphError(f"invalid symptoms-per-disease range {lo}..{hi}")
    if n_symptoms < hi:
        raise GraphError(
            f"infeasible: {n_symptoms} symptoms cannot satisfy up to {hi} distinct picks per disease"
        )
    if not (0.0 <= overlap <= 1.0):
        raise GraphError("overlap must be a probability in [0, 1]")

    rng = np.random.default_rng(seed)
    entities = [Entity(i, f"disease_{i:04d}", DISEASE) for i in range(n_diseases)]
    entities += [
        Entity(n_diseases + j, f"symptom_{j:04d}", SYMPTOM) for j in range(n_symptoms)
    ]
    symptom_ids = [n_diseases + j for j in range(n_symptoms)]

    used: list[int] = []
    used_set: set[int] = set()
    unused = list(symptom_ids)
    edges: set[tuple[int, int]] = set()

    for d in range(n_diseases):
        degree = int(rng.integers(lo, hi + 1))
        attached: set[int] = set()
        while len(attached) < degree:
            reuse = used_set and (not unused or rng.random() < overlap)
            if reuse:
                s = used[int(rng.integers(len(used)))]
                if s in attached:
                    # fall back to a fresh symptom so the loop always advances
                    candidates = [c for c in (unused or used) if c not in attached]
                    if not candidates:
                        break
                    s = candidates[int(rng.integers(len(candidates)))]
            else:
                s = unused[int(rng.integers(len(unused)))]
            attached.add(s)
            if s not in used_set:
                used_set.add(s)
                used.append(s)
                unused.remove(s)
            edges.add((s, d))

    # guarantee symptom degree >= 1
    for s in list(unused):
        d = int(rng.integers(n_diseases))
        edges.add((s, d))

    triples = [Triple(s, 0, d) for s, d in sorted(edges)]
    return KnowledgeGraph(entities, ["indicates"], triples)


def expand_from(
    graph: KnowledgeGraph, seeds: list[int], depth: int
) -> list[tuple[int, tuple[tuple[int, int], ...]]]:
    """BFS out to `depth` hops from a seed set, treating edges as bidirectional.

    Returns (entity id, path) pairs sorted by (depth, id), excluding the
    seeds. Each path hop is (relation id, direction) with direction FORWARD
    when the hop followed the stored symptom->disease orientation and
    REVERSE otherwise. The first (shortest) path found wins; neighbor
    expansion is in ascending id order so results are deterministic.
    """
    if depth not in (1, 2):
        raise ValueError(f"depth must be 1 or 2, got {depth}")
    for s in seeds:
        if not (0 <= s < graph.n_entities):
            raise GraphError(f"unknown entity id {s}")

    visited = set(seeds)
    frontier = [(s, ()) for s in sorted(visited)]
    results: list[tuple[int, tuple[tuple[int, int], ...]]] = []
    for _ in range(depth):
        next_frontier = []
        for node, path in frontier:
            hops = [(int(n), FORWARD) for n in graph._out[node]]
            hops += [(int(n), REVERSE) for n in graph._in[node]]
            for nbr, direction in sorted(hops):
                if nbr in visited:
                    continue
                visited.add(nbr)
                rel = (
                    graph._rel_of[(node, nbr)]
                    if direction == FORWARD
                    else graph._rel_of[(nbr, node)]
                )
                new_path = path + ((rel, direction),)
                results.append((nbr, new_path))
                next_frontier.append((nbr, new_path))
        frontier = next_frontier
    results.sort(key=lambda item: (len(item[1]), item[0]))
    return results


def neighbors_within_depth(
    graph: KnowledgeGraph, start: int, depth: int
) -> list[tuple[int, tuple[tuple[int, int], ...]]]:
    """Entities reachable from one entity within `depth` bidirectional hops."""
    return expand_from(graph, [start], depth)


def sample_patient_case(
    graph: KnowledgeGraph, rng: np.random.Generator, drop_prob: float
) -> PatientCase:
    """Sample a uniform disease and drop each of its symptoms independently.

    At least one symptom is always retained so the case carries evidence.
    """
    if not (0.0 <= drop_prob < 1.0):
        raise ValueError("drop_prob must be in [0, 1)")
    disease = int(graph.disease_ids[int(rng.integers(graph.n_diseases))])
    full = graph.symptoms_of(disease)
    if len(full) == 0:
        raise GraphError(f"disease {disease} has no symptoms")
    keep = rng.random(len(full)) >= drop_prob
    present = full[keep]
    if len(present) == 0:
        present = full[[int(rng.integers(len(full)))]]
    return PatientCase(
        disease=disease,
        present_symptoms=frozenset(int(s) for s in present),
        full_symptoms=frozenset(int(s) for s in full),
    )


def corrupt_triple(
    graph: KnowledgeGraph, triple: Triple, rng: np.random.Generator
) -> Triple:
    """Replace the tail with a uniform different entity not forming a real triple."""
    n = graph.n_entities
    taken = graph.triple_tuples
    for _ in range(64):
        t = int(rng.integers(n - 1))
        if t >= triple.tail:
            t += 1  # uniform over entities != tail
        if (triple.head, triple.relation, t) not in taken:
            return Triple(triple.head, triple.relation, t)
    # dense fallback: enumerate the surviving candidates once
    candidates = [
        t
        for t in range(n)
        if t != triple.tail and (triple.head, triple.relation, t) not in taken
    ]
    if not candidates:
        raise GraphError("graph too dense: no corrupting tail exists for this triple")
    return Triple(triple.head, triple.relation, candidates[int(rng.integers(len(candidates)))])
