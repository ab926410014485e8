"""Evidence vectors and the disease classifier.

The classifier maps a summed evidence vector (dimension k) to a probability
distribution over diseases. Training inputs are built from each disease's
depth-2 neighborhood with random node dropout; at consultation time the
input is simply the sum of confirmed-symptom vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import nn
from .embedding import EmbeddingTable
from .graph import FORWARD, KnowledgeGraph, expand_from

log = logging.getLogger(__name__)

Path = tuple[tuple[int, int], ...]


def path_relation_vector(tab: EmbeddingTable, path: Path) -> np.ndarray:
    """Net signed relation vector along a traversal path.

    A hop taken with the stored symptom->disease orientation contributes -r
    and a hop against it contributes +r, so the virtual vector of a reached
    entity always lands near the entity it was reached from (h + r = t both
    ways). Alternating hops in this bipartite graph cancel.
    """
    vec = np.zeros(tab.k)
    for rel, direction in path:
        sign = -1.0 if direction == FORWARD else 1.0
        vec += sign * tab.relation_vecs[rel]
    return vec


def evidence_vector(
    tab: EmbeddingTable,
    direct_ids,
    reached: list[tuple[int, Path]] = (),
) -> np.ndarray:
    """Sum of raw vectors for given entities plus virtual vectors for reached ones.

    `reached` pairs each indirectly connected entity with the traversal path
    used to find it, as produced by expand_from / neighbors_within_depth.
    """
    direct_ids = list(direct_ids)
    reached = list(reached)
    if not direct_ids and not reached:
        raise ValueError("evidence must not be empty")
    vec = np.zeros(tab.k)
    if direct_ids:
        # ascending-id summation keeps the result a pure function of the set
        ids = np.sort(np.asarray(direct_ids, dtype=np.int64))
        vec += tab.entity_vecs[ids].sum(axis=0)
    for entity, path in sorted(reached, key=lambda item: item[0]):
        vec += tab.entity_vecs[entity] + path_relation_vector(tab, path)
    return vec


def expanded_evidence_vector(
    graph: KnowledgeGraph, tab: EmbeddingTable, seeds, depth: int = 2
) -> np.ndarray:
    """Evidence vector for the seeds plus everything within `depth` hops of them."""
    seeds = [int(s) for s in seeds]
    return evidence_vector(tab, seeds, expand_from(graph, seeds, depth))


@dataclass
class DiagnosisModel:
    net: nn.Mlp3
    disease_ids: np.ndarray  # output position -> disease id, ascending

    def __post_init__(self):
        if self.net.head != nn.SOFTMAX:
            raise ValueError("diagnosis net must use a softmax head")
        if self.net.d_out != len(self.disease_ids):
            raise ValueError("output width must equal the number of diseases")
        self._position = {int(d): i for i, d in enumerate(self.disease_ids)}

    def position_of(self, disease_id: int) -> int:
        return self._position[int(disease_id)]

    def copy(self) -> "DiagnosisModel":
        return DiagnosisModel(self.net.copy(), self.disease_ids.copy())


@dataclass
class DiagnosisConfig:
    epochs: int = 1000
    batch: int = 500
    drop_prob: float = 0.1
    lr: float = 0.005
    hidden: int = 256
    minibatch: int = 20
    seed: int = 0
    fine_tune_embeddings: bool = False


@dataclass
class NeighborhoodSample:
    """Precomputed depth-2 neighborhood of one disease, ready for dropout.

    Row i of entity_ids / rel_coefs describes one droppable node whose
    contribution is entity_vec + rel_coef * relation_vec (single relation
    type; depth-2 paths cancel to coefficient 0 here).
    """

    disease: int
    entity_ids: np.ndarray
    rel_coefs: np.ndarray


def disease_neighborhoods(graph: KnowledgeGraph) -> list[NeighborhoodSample]:
    """Depth-2 neighborhood rows for every disease, in disease-id order.

    Depth-1 symptoms are directly connected and enter with their raw
    vectors; depth-2 entities enter as virtual vectors through their path.
    """
    samples = []
    for d in graph.disease_ids:
        rows_id, rows_coef = [], []
        for entity, path in expand_from(graph, [int(d)], 2):
            coef = 0.0
            if len(path) > 1:  # indirect: apply the signed path relation
                for rel, direction in path:
                    coef += -1.0 if direction == FORWARD else 1.0
            rows_id.append(entity)
            rows_coef.append(coef)
        samples.append(
            NeighborhoodSample(
                disease=int(d),
                entity_ids=np.array(rows_id, dtype=np.int64),
                rel_coefs=np.array(rows_coef, dtype=np.float64),
            )
        )
    return samples


def neighborhood_input(
    tab: EmbeddingTable, sample: NeighborhoodSample, keep: np.ndarray
) -> np.ndarray:
    """Input vector for the kept rows of a neighborhood (relation id 0)."""
    ids = sample.entity_ids[keep]
    coefs = sample.rel_coefs[keep]
    vec = tab.entity_vecs[ids].sum(axis=0) if len(ids) else np.zeros(tab.k)
    total_coef = float(coefs.sum())
    if total_coef != 0.0:
        vec = vec + total_coef * tab.relation_vecs[0]
    return vec


def full_evidence_input(
    graph: KnowledgeGraph, tab: EmbeddingTable, disease: int
) -> np.ndarray:
    """The no-dropout training-style input for one disease."""
    samples = [s for s in disease_neighborhoods(graph) if s.disease == int(disease)]
    if not samples:
        raise ValueError(f"{disease} is not a disease id")
    s = samples[0]
    return neighborhood_input(tab, s, np.ones(len(s.entity_ids), dtype=bool))


def init_diagnosis(
    graph: KnowledgeGraph, k: int, hidden: int, rng: np.random.Generator
) -> DiagnosisModel:
    net = nn.init_mlp3(k, hidden, graph.n_diseases, nn.SOFTMAX, rng)
    return DiagnosisModel(net=net, disease_ids=graph.disease_ids.copy())


def train_diagnosis(
    graph: KnowledgeGraph,
    tab: EmbeddingTable,
    cfg: DiagnosisConfig,
    rng: np.random.Generator | None = None,
) -> tuple[DiagnosisModel, list[float]]:
    """Train the classifier on dropout-perturbed disease neighborhoods.

    Per epoch, cfg.batch diseases are sampled with replacement and processed
    in minibatches with cross-entropy + SGD. Embeddings stay frozen unless
    cfg.fine_tune_embeddings is set, in which case input gradients flow back
    into the table. Returns the model and the per-epoch mean loss trace.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    model = init_diagnosis(graph, tab.k, cfg.hidden, rng)
    neighborhoods = disease_neighborhoods(graph)
    n_dis = len(neighborhoods)
    trace: list[float] = []

    for epoch in range(cfg.epochs):
        picks = rng.integers(n_dis, size=cfg.batch)
        epoch_loss = 0.0
        for lo in range(0, cfg.batch, cfg.minibatch):
            chunk = picks[lo : lo + cfg.minibatch]
            B = len(chunk)
            X = np.empty((B, tab.k))
            targets = np.empty(B, dtype=np.int64)
            keeps = []
            for i, pos in enumerate(chunk):
                s = neighborhoods[pos]
                keep = rng.random(len(s.entity_ids)) >= cfg.drop_prob
                if not keep.any():
                    keep[int(rng.integers(len(keep)))] = True  # never train on nothing
                keeps.append(keep)
                X[i] = neighborhood_input(tab, s, keep)
                targets[i] = pos
            probs, cache = nn.forward(model.net, X)
            p_true = np.maximum(probs[np.arange(B), targets], nn.EPS)
            epoch_loss += float(-np.log(p_true).sum())
            d_logits = probs.copy()
            d_logits[np.arange(B), targets] -= 1.0
            d_logits /= B
            grads = nn.backward(model.net, cache, d_logits)
            if cfg.fine_tune_embeddings:
                dX = nn.input_gradient(model.net, cache, d_logits)
                for i, pos in enumerate(chunk):
                    s = neighborhoods[pos]
                    kept_ids = s.entity_ids[keeps[i]]
                    np.add.at(tab.entity_vecs, kept_ids, -cfg.lr * dX[i])
                    coef = float(s.rel_coefs[keeps[i]].sum())
                    if coef != 0.0:
                        tab.relation_vecs[0] -= cfg.lr * coef * dX[i]
            nn.sgd_step(model.net, grads, cfg.lr)
        trace.append(epoch_loss / cfg.batch)
        if (epoch + 1) % 100 == 0:
            log.info("diagnosis epoch %d/%d mean loss %.4f", epoch + 1, cfg.epochs, trace[-1])
    return model, trace


def diagnose(model: DiagnosisModel, x: np.ndarray) -> list[tuple[int, float]]:
    """Ranked (disease id, probability) list, descending, ties by ascending id."""
    probs, _ = nn.forward(model.net, np.asarray(x, dtype=np.float64))
    order = np.lexsort((model.disease_ids, -probs))
    return [(int(model.disease_ids[i]), float(probs[i])) for i in order]


def top1(model: DiagnosisModel, x: np.ndarray) -> int:
    """Disease id with the highest probability (ties by ascending id)."""
    probs, _ = nn.forward(model.net, np.asarray(x, dtype=np.float64))
    order = np.lexsort((model.disease_ids, -probs))
    return int(model.disease_ids[order[0]])


def top1_batch(model: DiagnosisModel, X: np.ndarray) -> np.ndarray:
    """Vectorized top-1 disease ids for a batch of evidence vectors."""
    probs, _ = nn.forward(model.net, X)
    # argmax takes the first maximum, which is the lowest disease id
    return model.disease_ids[probs.argmax(axis=1)]
