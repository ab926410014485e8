"""Translation embeddings for the graph: h + r should land near t.

Training minimizes a margin ranking loss between real triples and
tail-corrupted ones; the finished table is the shared input representation
for every downstream network.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import KnowledgeGraph, Triple, corrupt_triple

log = logging.getLogger(__name__)

INIT_SIX_OVER_SQRT_K = "six-over-sqrt-k"
INIT_SQRT_K_OVER_6 = "sqrt-k-over-6"


@dataclass
class EmbeddingTable:
    entity_vecs: np.ndarray  # (n_entities, k)
    relation_vecs: np.ndarray  # (n_relations, k)

    @property
    def k(self) -> int:
        return self.entity_vecs.shape[1]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.entity_vecs.copy(), self.relation_vecs.copy())


@dataclass
class TranseConfig:
    k: int = 512
    gamma: float = 1.0
    rounds: int = 1000
    batch: int = 500
    lr: float = 0.01
    seed: int = 0
    # The published init bound sqrt(k)/6 is almost certainly a transposition
    # of the classic 6/sqrt(k); both are selectable.
    init_bound: str = INIT_SIX_OVER_SQRT_K
    normalize_entities_each_round: bool = False

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.rounds < 0 or self.batch < 1 or self.k < 1:
            raise ValueError("rounds must be >= 0, batch and k >= 1")
        if self.init_bound not in (INIT_SIX_OVER_SQRT_K, INIT_SQRT_K_OVER_6):
            raise ValueError(f"unknown init_bound {self.init_bound!r}")

    def bound(self) -> float:
        if self.init_bound == INIT_SIX_OVER_SQRT_K:
            return 6.0 / np.sqrt(self.k)
        return np.sqrt(self.k) / 6.0


def init_embeddings(
    n_entities: int, n_relations: int, cfg: TranseConfig, rng: np.random.Generator
) -> EmbeddingTable:
    """Uniform init inside the configured bound; relation vectors L2-normalized."""
    if n_entities < 1 or n_relations < 1:
        raise ValueError("need at least one entity and one relation")
    b = cfg.bound()
    entity_vecs = rng.uniform(-b, b, size=(n_entities, cfg.k))
    relation_vecs = rng.uniform(-b, b, size=(n_relations, cfg.k))
    norms = np.linalg.norm(relation_vecs, axis=1)
    while (norms == 0).any():  # measure-zero, but the contract demands a resample
        zero = norms == 0
        relation_vecs[zero] = rng.uniform(-b, b, size=(int(zero.sum()), cfg.k))
        norms = np.linalg.norm(relation_vecs, axis=1)
    relation_vecs /= norms[:, None]
    return EmbeddingTable(entity_vecs, relation_vecs)


def score_triple(tab: EmbeddingTable, h: int, r: int, t: int) -> float:
    """L2 distance ||h + r - t||; 0 means the translation holds exactly."""
    n_e = tab.entity_vecs.shape[0]
    if not (0 <= h < n_e and 0 <= t < n_e and 0 <= r < tab.relation_vecs.shape[0]):
        raise IndexError(f"triple ids ({h},{r},{t}) out of range")
    return float(np.linalg.norm(tab.entity_vecs[h] + tab.relation_vecs[r] - tab.entity_vecs[t]))


def score_tails(tab: EmbeddingTable, h: int, r: int) -> np.ndarray:
    """Distances ||h + r - t|| for every candidate tail entity at once."""
    proj = tab.entity_vecs[h] + tab.relation_vecs[r]
    return np.linalg.norm(proj[None, :] - tab.entity_vecs, axis=1)


def margin_loss(pos: np.ndarray, neg: np.ndarray, gamma: float) -> float:
    """Sum of max(0, pos_i + gamma - neg_i) over paired scores."""
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.shape != neg.shape:
        raise ValueError("pos and neg must pair 1:1")
    return float(np.maximum(0.0, pos + gamma - neg).sum())


def margin_loss_grads(
    tab: EmbeddingTable,
    heads: np.ndarray,
    rels: np.ndarray,
    tails: np.ndarray,
    neg_tails: np.ndarray,
    gamma: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and gradients of the summed hinge for a batch of paired triples.

    Returns (loss, d_entity_vecs, d_relation_vecs). Duplicate entities in
    the batch accumulate. The hinge kink (active margin exactly 0) takes
    the zero subgradient.
    """
    E, R = tab.entity_vecs, tab.relation_vecs
    d_pos = E[heads] + R[rels] - E[tails]
    d_neg = E[heads] + R[rels] - E[neg_tails]
    f_pos = np.linalg.norm(d_pos, axis=1)
    f_neg = np.linalg.norm(d_neg, axis=1)
    margins = f_pos + gamma - f_neg
    loss = float(np.maximum(0.0, margins).sum())

    active = margins > 0
    u_pos = np.zeros_like(d_pos)
    u_neg = np.zeros_like(d_neg)
    nz = active & (f_pos > 0)
    u_pos[nz] = d_pos[nz] / f_pos[nz, None]
    nz = active & (f_neg > 0)
    u_neg[nz] = d_neg[nz] / f_neg[nz, None]

    dE = np.zeros_like(E)
    dR = np.zeros_like(R)
    np.add.at(dE, heads, u_pos - u_neg)
    np.add.at(dE, tails, -u_pos)
    np.add.at(dE, neg_tails, u_neg)
    np.add.at(dR, rels, u_pos - u_neg)
    return loss, dE, dR


@dataclass
class TranseTrace:
    """Per-round mean pair loss, recorded before each update."""

    round_losses: list[float] = field(default_factory=list)


def train_transe(
    graph: KnowledgeGraph, cfg: TranseConfig, rng: np.random.Generator | None = None
) -> tuple[EmbeddingTable, TranseTrace]:
    """Run cfg.rounds rounds of margin-ranking SGD over sampled triple pairs.

    Each round samples cfg.batch positives (with replacement), corrupts each
    tail, and takes one descent step on the batch-mean hinge loss. Entities
    are not renormalized unless cfg.normalize_entities_each_round is set.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    tab = init_embeddings(graph.n_entities, graph.n_relations, cfg, rng)
    trace = TranseTrace()
    triples = graph.triples
    n_triples = len(triples)
    if n_triples == 0:
        raise ValueError("graph has no triples to train on")

    for rnd in range(cfg.rounds):
        idx = rng.integers(n_triples, size=cfg.batch)
        heads = np.empty(cfg.batch, dtype=np.int64)
        rels = np.empty(cfg.batch, dtype=np.int64)
        tails = np.empty(cfg.batch, dtype=np.int64)
        neg_tails = np.empty(cfg.batch, dtype=np.int64)
        for i, j in enumerate(idx):
            t = triples[j]
            heads[i], rels[i], tails[i] = t.head, t.relation, t.tail
            neg_tails[i] = corrupt_triple(graph, t, rng).tail

        loss, dE, dR = margin_loss_grads(tab, heads, rels, tails, neg_tails, cfg.gamma)
        trace.round_losses.append(loss / cfg.batch)
        # descend the summed hinge itself; the active-pair unit gradients
        # stay O(1), so no batch normalization is needed or wanted
        tab.entity_vecs -= cfg.lr * dE
        tab.relation_vecs -= cfg.lr * dR
        if cfg.normalize_entities_each_round:
            norms = np.linalg.norm(tab.entity_vecs, axis=1)
            norms[norms == 0] = 1.0
            tab.entity_vecs /= norms[:, None]
        if (rnd + 1) % 100 == 0:
            log.info("transe round %d/%d mean pair loss %.4f", rnd + 1, cfg.rounds, trace.round_losses[-1])

    if not np.isfinite(tab.entity_vecs).all() or not np.isfinite(tab.relation_vecs).all():
        raise FloatingPointError("embedding training diverged to non-finite values")
    return tab, trace


def filtered_tail_ranks(
    tab: EmbeddingTable, graph: KnowledgeGraph, triples: list[Triple]
) -> np.ndarray:
    """1-based rank of each true tail among all entities, filtering other true tails.

    Candidates that would form a different real triple with the same head and
    relation are excluded before ranking, the usual filtered protocol.
    """
    ranks = np.empty(len(triples), dtype=np.int64)
    by_head_rel: dict[tuple[int, int], set[int]] = {}
    for t in graph.triples:
        by_head_rel.setdefault((t.head, t.relation), set()).add(t.tail)
    for i, t in enumerate(triples):
        scores = score_tails(tab, t.head, t.relation)
        others = by_head_rel.get((t.head, t.relation), set()) - {t.tail}
        if others:
            scores = scores.copy()
            scores[list(others)] = np.inf
        ranks[i] = 1 + int((scores < scores[t.tail]).sum())
    return ranks


def held_out_pairs(
    graph: KnowledgeGraph, n_pairs: int, rng: np.random.Generator
) -> list[tuple[Triple, Triple]]:
    """Sample (positive, corrupted) evaluation pairs not used as such in training."""
    triples = graph.triples
    pairs = []
    for _ in range(n_pairs):
        pos = triples[int(rng.integers(len(triples)))]
        pairs.append((pos, corrupt_triple(graph, pos, rng)))
    return pairs
