"""Model bundle persistence: npz payloads plus a JSON manifest.

A bundle directory holds one npz per model and a manifest with shapes,
training configs, per-file SHA-256 checksums and the fingerprint of the
graph everything was trained on. Loading verifies all of it; a bundle
trained on one graph refuses to load against another.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .actor import ActorModel
from .decision import DecisionModel
from .diagnosis import DiagnosisModel
from .embedding import EmbeddingTable
from .graph import KnowledgeGraph

FORMAT_VERSION = 1
MANIFEST = "manifest.json"

EMBEDDINGS_FILE = "embeddings.npz"
DIAGNOSIS_FILE = "diagnosis.npz"
DECISION_FILE = "decision.npz"
ACTOR_FILE = "actor.npz"


class BundleError(RuntimeError):
    """Missing pieces, version mismatch or inconsistent shapes."""


class ChecksumError(BundleError):
    """A stored file does not match its manifest checksum."""


class FingerprintMismatch(BundleError):
    """The bundle was trained on a different graph."""


@dataclass
class ModelBundle:
    graph_fingerprint: str
    embeddings: EmbeddingTable
    diagnosis: DiagnosisModel
    decision: DecisionModel
    actor: ActorModel
    configs: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_manifest(dir_path: Path) -> dict:
    manifest_path = dir_path / MANIFEST
    if not manifest_path.exists():
        raise BundleError(f"no manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise BundleError(
            f"bundle format version {manifest.get('format_version')} "
            f"is not the supported {FORMAT_VERSION}"
        )
    return manifest


def _write_manifest(dir_path: Path, manifest: dict) -> None:
    (dir_path / MANIFEST).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _update_manifest(
    dir_path: Path, fingerprint: str, filename: str, config: dict | None
) -> None:
    manifest_path = dir_path / MANIFEST
    if manifest_path.exists():
        manifest = _read_manifest(dir_path)
        if manifest["graph_fingerprint"] != fingerprint:
            raise FingerprintMismatch(
                "refusing to mix models trained on different graphs in one bundle"
            )
    else:
        manifest = {
            "format_version": FORMAT_VERSION,
            "graph_fingerprint": fingerprint,
            "files": {},
            "configs": {},
        }
    manifest["files"][filename] = _sha256(dir_path / filename)
    if config is not None:
        manifest["configs"][filename.removesuffix(".npz")] = config
    _write_manifest(dir_path, manifest)


def _verify_file(dir_path: Path, manifest: dict, filename: str, what: str) -> Path:
    path = dir_path / filename
    if filename not in manifest["files"] or not path.exists():
        raise BundleError(f"bundle is missing the {what} model ({filename})")
    actual = _sha256(path)
    if actual != manifest["files"][filename]:
        raise ChecksumError(f"{filename} checksum mismatch: bundle is corrupt or tampered")
    return path


def save_embeddings(
    dir_path: str | Path, tab: EmbeddingTable, fingerprint: str, config: dict | None = None
) -> None:
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    np.savez(
        dir_path / EMBEDDINGS_FILE,
        entity_vecs=tab.entity_vecs,
        relation_vecs=tab.relation_vecs,
    )
    _update_manifest(dir_path, fingerprint, EMBEDDINGS_FILE, config)


def load_embeddings(dir_path: str | Path) -> EmbeddingTable:
    dir_path = Path(dir_path)
    manifest = _read_manifest(dir_path)
    path = _verify_file(dir_path, manifest, EMBEDDINGS_FILE, "embedding")
    with np.load(path) as data:
        return EmbeddingTable(data["entity_vecs"].copy(), data["relation_vecs"].copy())


def _save_net(path: Path, net: nn.Mlp3, extra: dict) -> None:
    np.savez(
        path,
        W1=net.W1,
        b1=net.b1,
        W2=net.W2,
        b2=net.b2,
        head=np.array(net.head),
        **extra,
    )


def _load_net(data) -> nn.Mlp3:
    return nn.Mlp3(
        W1=data["W1"].copy(),
        b1=data["b1"].copy(),
        W2=data["W2"].copy(),
        b2=data["b2"].copy(),
        head=str(data["head"]),
    )


def save_diagnosis(
    dir_path: str | Path, model: DiagnosisModel, fingerprint: str, config: dict | None = None
) -> None:
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    _save_net(dir_path / DIAGNOSIS_FILE, model.net, {"disease_ids": model.disease_ids})
    _update_manifest(dir_path, fingerprint, DIAGNOSIS_FILE, config)


def load_diagnosis(dir_path: str | Path) -> DiagnosisModel:
    dir_path = Path(dir_path)
    manifest = _read_manifest(dir_path)
    path = _verify_file(dir_path, manifest, DIAGNOSIS_FILE, "diagnosis")
    with np.load(path) as data:
        return DiagnosisModel(net=_load_net(data), disease_ids=data["disease_ids"].copy())


def save_decision(
    dir_path: str | Path, model: DecisionModel, fingerprint: str, config: dict | None = None
) -> None:
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    _save_net(dir_path / DECISION_FILE, model.net, {"threshold": np.array(model.threshold)})
    _update_manifest(dir_path, fingerprint, DECISION_FILE, config)


def load_decision(dir_path: str | Path) -> DecisionModel:
    dir_path = Path(dir_path)
    manifest = _read_manifest(dir_path)
    path = _verify_file(dir_path, manifest, DECISION_FILE, "decision")
    with np.load(path) as data:
        return DecisionModel(net=_load_net(data), threshold=float(data["threshold"]))


def save_actor(
    dir_path: str | Path, model: ActorModel, fingerprint: str, config: dict | None = None
) -> None:
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    _save_net(dir_path / ACTOR_FILE, model.net, {"symptom_ids": model.symptom_ids})
    _update_manifest(dir_path, fingerprint, ACTOR_FILE, config)


def load_actor(dir_path: str | Path) -> ActorModel:
    dir_path = Path(dir_path)
    manifest = _read_manifest(dir_path)
    path = _verify_file(dir_path, manifest, ACTOR_FILE, "actor")
    with np.load(path) as data:
        return ActorModel(net=_load_net(data), symptom_ids=data["symptom_ids"].copy())


def save_bundle(bundle: ModelBundle, dir_path: str | Path) -> None:
    """Write every model plus the manifest; overwrites files already there."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    fp = bundle.graph_fingerprint
    save_embeddings(dir_path, bundle.embeddings, fp, bundle.configs.get("embeddings"))
    save_diagnosis(dir_path, bundle.diagnosis, fp, bundle.configs.get("diagnosis"))
    save_decision(dir_path, bundle.decision, fp, bundle.configs.get("decision"))
    save_actor(dir_path, bundle.actor, fp, bundle.configs.get("actor"))


def load_bundle(dir_path: str | Path, graph: KnowledgeGraph | None = None) -> ModelBundle:
    """Load and verify a complete bundle.

    Checks the manifest version, every checksum, shape consistency across
    models, and (when a graph is given) the graph fingerprint.
    """
    dir_path = Path(dir_path)
    manifest = _read_manifest(dir_path)
    fingerprint = manifest["graph_fingerprint"]
    if graph is not None and graph.fingerprint() != fingerprint:
        raise FingerprintMismatch(
            f"bundle was trained on graph {fingerprint[:12]}..., "
            f"got graph {graph.fingerprint()[:12]}..."
        )

    embeddings = load_embeddings(dir_path)
    diagnosis = load_diagnosis(dir_path)
    decision = load_decision(dir_path)
    actor = load_actor(dir_path)

    k = embeddings.k
    if diagnosis.net.d_in != k:
        raise BundleError("diagnosis input width does not match the embedding dimension")
    if decision.net.d_in != k:
        raise BundleError("decision input width does not match the embedding dimension")
    if actor.net.d_in != 3 * k:
        raise BundleError("actor input width must be three embedding dimensions")
    if graph is not None:
        if diagnosis.net.d_out != graph.n_diseases:
            raise BundleError("diagnosis output width does not match the disease count")
        if actor.net.d_out != graph.n_symptoms:
            raise BundleError("actor output width does not match the symptom count")

    return ModelBundle(
        graph_fingerprint=fingerprint,
        embeddings=embeddings,
        diagnosis=diagnosis,
        decision=decision,
        actor=actor,
        configs=manifest.get("configs", {}),
    )
