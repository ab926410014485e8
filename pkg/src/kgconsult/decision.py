"""Stop-or-continue judgement over collected evidence.

A sigmoid-headed net scores the current evidence vector; values at or above
the threshold mean the evidence suffices to diagnose. Training labels come
from the diagnosis net: a sample is positive exactly when the classifier
already names the right disease from that evidence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import nn
from .diagnosis import DiagnosisModel, evidence_vector, top1_batch
from .embedding import EmbeddingTable
from .graph import KnowledgeGraph, PatientCase

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Raised when decision training cannot produce usable label batches."""


@dataclass
class DecisionModel:
    net: nn.Mlp3
    threshold: float = 0.5

    def __post_init__(self):
        if self.net.head != nn.SIGMOID or self.net.d_out != 1:
            raise ValueError("decision net must be a 1-output sigmoid head")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must be in (0, 1)")

    def copy(self) -> "DecisionModel":
        return DecisionModel(self.net.copy(), self.threshold)


@dataclass
class DecisionConfig:
    epochs: int = 1000
    batch: int = 500
    lr: float = 0.005
    hidden: int = 256
    minibatch: int = 20
    seed: int = 0
    threshold: float = 0.5
    # evidence retention per sample is drawn uniformly from this range so
    # both label classes appear; plain 0.1 dropout is almost all positives
    retention_low: float = 0.1
    retention_high: float = 1.0
    positive_weight: float | None = None
    max_degenerate_epochs: int = 10


def label_sample(
    diag: DiagnosisModel,
    case: PatientCase,
    evidence: list[int],
    tab: EmbeddingTable,
    graph: KnowledgeGraph,
) -> int:
    """1 iff the diagnosis net's top-1 on this evidence is the case's disease."""
    if not evidence:
        raise ValueError("evidence must not be empty")
    x = evidence_vector(tab, evidence)
    probs, _ = nn.forward(diag.net, x)
    order = np.lexsort((diag.disease_ids, -probs))
    return int(int(diag.disease_ids[order[0]]) == case.disease)


def sufficiency(model: DecisionModel, x: np.ndarray) -> float:
    """Probability in (0,1) that the evidence suffices; compare to model.threshold."""
    out, _ = nn.forward(model.net, np.asarray(x, dtype=np.float64))
    return float(out[0] if out.ndim == 1 else out)


def init_decision(k: int, cfg: DecisionConfig, rng: np.random.Generator) -> DecisionModel:
    net = nn.init_mlp3(k, cfg.hidden, 1, nn.SIGMOID, rng)
    return DecisionModel(net=net, threshold=cfg.threshold)


def _sample_evidence_batch(
    graph: KnowledgeGraph,
    tab: EmbeddingTable,
    diag: DiagnosisModel,
    n: int,
    cfg: DecisionConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """n (evidence vector, label) rows with per-sample retention fractions."""
    X = np.empty((n, tab.k))
    y = np.empty(n, dtype=np.float64)
    diseases = np.empty(n, dtype=np.int64)
    for i in range(n):
        d = int(graph.disease_ids[int(rng.integers(graph.n_diseases))])
        full = graph.symptoms_of(d)
        u = rng.uniform(cfg.retention_low, cfg.retention_high)
        keep = rng.random(len(full)) < u
        kept = full[keep]
        if len(kept) == 0:
            kept = full[[int(rng.integers(len(full)))]]
        X[i] = tab.entity_vecs[kept].sum(axis=0)
        diseases[i] = d
    y[:] = (top1_batch(diag, X) == diseases).astype(np.float64)
    return X, y


def train_decision(
    graph: KnowledgeGraph,
    tab: EmbeddingTable,
    diag: DiagnosisModel,
    cfg: DecisionConfig,
    rng: np.random.Generator | None = None,
) -> tuple[DecisionModel, list[float]]:
    """Fit the sufficiency net with logistic loss over labelled evidence subsets.

    An epoch whose labels are all one class is skipped and logged; more than
    cfg.max_degenerate_epochs consecutive skips abort with a diagnostic.
    Returns the model and the per-epoch mean loss trace.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    model = init_decision(tab.k, cfg, rng)
    trace: list[float] = []
    degenerate_run = 0

    for epoch in range(cfg.epochs):
        X, y = _sample_evidence_batch(graph, tab, diag, cfg.batch, cfg, rng)
        if y.min() == y.max():
            degenerate_run += 1
            log.warning("decision epoch %d degenerate labels (all %.0f), skipped", epoch, y[0])
            if degenerate_run > cfg.max_degenerate_epochs:
                raise TrainingError(
                    f"labels degenerate for {degenerate_run} consecutive epochs; "
                    f"diagnosis model separates nothing at rate {y.mean():.2f}"
                )
            continue
        degenerate_run = 0

        epoch_loss = 0.0
        for lo in range(0, cfg.batch, cfg.minibatch):
            Xb = X[lo : lo + cfg.minibatch]
            yb = y[lo : lo + cfg.minibatch]
            B = len(yb)
            p, cache = nn.forward(model.net, Xb)
            p = p[:, 0]
            pc = np.clip(p, nn.EPS, 1.0 - nn.EPS)
            w = np.ones(B)
            if cfg.positive_weight is not None:
                w[yb == 1.0] = cfg.positive_weight
            epoch_loss += float(-(w * (yb * np.log(pc) + (1 - yb) * np.log(1 - pc))).sum())
            d_logits = (w * (p - yb) / B)[:, None]
            grads = nn.backward(model.net, cache, d_logits)
            nn.sgd_step(model.net, grads, cfg.lr)
        trace.append(epoch_loss / cfg.batch)
        if (epoch + 1) % 100 == 0:
            log.info("decision epoch %d/%d mean loss %.4f", epoch + 1, cfg.epochs, trace[-1])
    return model, trace
