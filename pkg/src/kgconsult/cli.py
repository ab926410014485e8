"""Command-line entry point: graph generation, staged training, eval, serving.

Models accumulate in one bundle directory as the stages run in order
(transe, then diagnosis, then decision, then actor); each stage verifies it
is extending models trained on the same graph.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bundle as bundle_mod
from .actor import ActorTrainConfig, train_actor, write_reward_curve
from .config import load_config
from .consultation import CONCLUDED, ConsultationEngine
from .decision import DecisionConfig, train_decision
from .diagnosis import DiagnosisConfig, train_diagnosis
from .embedding import TranseConfig, train_transe
from .evaluation import evaluate
from .graph import generate_synthetic_graph, load_graph, save_graph

log = logging.getLogger(__name__)


def _load_graph_dir(graph_dir: str):
    d = Path(graph_dir)
    return load_graph(d / "entities.tsv", d / "triples.tsv")


def _parse_range(raw: str) -> tuple[int, int]:
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        return int(lo), int(hi)
    v = int(raw)
    return v, v


def cmd_graph_gen(args) -> int:
    graph = generate_synthetic_graph(
        n_diseases=args.diseases,
        n_symptoms=args.symptoms,
        symptoms_per_disease=_parse_range(args.per_disease),
        overlap=args.overlap,
        seed=args.seed,
    )
    entities_path, triples_path = save_graph(graph, args.out)
    print(
        f"wrote {graph.n_diseases} diseases, {graph.n_symptoms} symptoms, "
        f"{len(graph.triples)} triples to {entities_path.parent}"
    )
    print(f"fingerprint {graph.fingerprint()}")
    return 0


def cmd_train_transe(args) -> int:
    graph = _load_graph_dir(args.graph)
    cfg = TranseConfig(
        k=args.k, gamma=args.gamma, rounds=args.rounds, batch=args.batch,
        lr=args.lr, seed=args.seed, init_bound=args.init_bound,
    )
    tab, trace = train_transe(graph, cfg)
    bundle_mod.save_embeddings(args.out, tab, graph.fingerprint(), asdict(cfg))
    first = trace.round_losses[0] if trace.round_losses else float("nan")
    last = trace.round_losses[-1] if trace.round_losses else float("nan")
    print(f"transe done: mean pair loss {first:.4f} -> {last:.4f}; saved to {args.out}")
    return 0


def cmd_train_diagnosis(args) -> int:
    graph = _load_graph_dir(args.graph)
    tab = bundle_mod.load_embeddings(args.embeddings)
    cfg = DiagnosisConfig(
        epochs=args.epochs, batch=args.batch, drop_prob=args.drop,
        lr=args.lr, seed=args.seed,
    )
    model, trace = train_diagnosis(graph, tab, cfg)
    bundle_mod.save_diagnosis(args.out, model, graph.fingerprint(), asdict(cfg))
    print(f"diagnosis done: mean loss {trace[0]:.4f} -> {trace[-1]:.4f}; saved to {args.out}")
    return 0


def cmd_train_decision(args) -> int:
    graph = _load_graph_dir(args.graph)
    tab = bundle_mod.load_embeddings(args.embeddings)
    diag = bundle_mod.load_diagnosis(args.diagnosis)
    cfg = DecisionConfig(
        epochs=args.epochs, batch=args.batch, lr=args.lr,
        seed=args.seed, threshold=args.threshold,
    )
    model, trace = train_decision(graph, tab, diag, cfg)
    bundle_mod.save_decision(args.out, model, graph.fingerprint(), asdict(cfg))
    print(f"decision done: mean loss {trace[0]:.4f} -> {trace[-1]:.4f}; saved to {args.out}")
    return 0


def cmd_train_actor(args) -> int:
    graph = _load_graph_dir(args.graph)
    tab = bundle_mod.load_embeddings(args.models)
    diag = bundle_mod.load_diagnosis(args.models)
    decision = bundle_mod.load_decision(args.models)
    cfg = ActorTrainConfig(
        total_episodes=args.episodes, lr=args.lr, temperature=args.temp,
        capacity=args.capacity, seed=args.seed, fresh_only=args.fresh_only,
    )
    actor, history = train_actor(graph, tab, diag, decision, cfg)
    bundle_mod.save_actor(args.out, actor, graph.fingerprint(), asdict(cfg))
    curve_path = Path(args.out) / "reward_curve.csv"
    write_reward_curve(history, curve_path)
    recent = float(np.mean([h.ret for h in history[-500:]])) if history else float("nan")
    print(f"actor done: recent mean return {recent:.2f}; saved to {args.out}")
    print(f"reward curve at {curve_path}")
    return 0


def cmd_eval(args) -> int:
    graph = _load_graph_dir(args.graph)
    bundle = bundle_mod.load_bundle(args.models, graph)
    engine = ConsultationEngine(
        graph, bundle.embeddings, bundle.diagnosis, bundle.decision, bundle.actor,
        max_questions=args.max_questions,
    )
    report = evaluate(engine, graph, n_samples=args.samples, drop_prob=args.drop, seed=args.seed)
    payload = report.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"report written to {args.out}")
    print(
        f"n={report.n_samples} top1={report.top1:.3f} top3={report.top3:.3f} "
        f"top5={report.top5:.3f} avg_questions={report.avg_questions:.2f}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    graph = _load_graph_dir(args.graph)
    bundle = bundle_mod.load_bundle(args.models, graph)
    app = create_app(
        bundle, graph, max_questions=args.max_questions, static_dir=args.ui or None
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_consult(args) -> int:
    """Interactive terminal consultation, the no-browser fallback."""
    graph = _load_graph_dir(args.graph)
    bundle = bundle_mod.load_bundle(args.models, graph)
    engine = ConsultationEngine(
        graph, bundle.embeddings, bundle.diagnosis, bundle.decision, bundle.actor,
        max_questions=args.max_questions,
    )
    print("known symptoms (id: name):")
    for s in graph.symptom_ids:
        print(f"  {int(s)}: {graph.name(int(s))}")
    raw = input("enter initial symptom ids (comma separated): ").strip()
    initial = [int(tok) for tok in raw.split(",") if tok.strip()]
    session = engine.start_session(initial)
    while session.status != CONCLUDED:
        q = session.pending_question
        answer = ""
        while answer not in ("yes", "no"):
            answer = input(f"do you have {graph.name(q)!r}? [yes/no] ").strip().lower()
        engine.submit_answer(session, q, answer)
    print(f"\nconcluded after {session.question_count} questions; most likely:")
    for d, p in session.diagnosis[:5]:
        print(f"  {graph.name(d)}: {100 * p:.1f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgconsult",
        description="knowledge-graph consultation models: train, evaluate, serve",
    )
    parser.add_argument("--config", help="key=value file applied as defaults")
    parser.add_argument("--seed", type=int, default=0, help="default RNG seed")
    parser.add_argument("--log-level", default="warning")
    sub = parser.add_subparsers(dest="command", required=True)

    graph_cmd = sub.add_parser("graph", help="graph utilities")
    graph_sub = graph_cmd.add_subparsers(dest="graph_command", required=True)
    gen = graph_sub.add_parser("gen", help="generate a synthetic graph")
    gen.add_argument("--diseases", type=int, required=True)
    gen.add_argument("--symptoms", type=int, required=True)
    gen.add_argument("--per-disease", default="5..10", help="LO..HI symptoms per disease")
    gen.add_argument("--overlap", type=float, default=0.3)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_graph_gen)

    train = sub.add_parser("train", help="train one model stage")
    train_sub = train.add_subparsers(dest="train_command", required=True)

    transe = train_sub.add_parser("transe")
    transe.add_argument("--graph", required=True)
    transe.add_argument("--k", type=int, default=512)
    transe.add_argument("--rounds", type=int, default=1000)
    transe.add_argument("--batch", type=int, default=500)
    transe.add_argument("--gamma", type=float, default=1.0)
    transe.add_argument("--lr", type=float, default=0.01)
    transe.add_argument("--init-bound", default="six-over-sqrt-k",
                        choices=["six-over-sqrt-k", "sqrt-k-over-6"])
    transe.add_argument("--seed", type=int)
    transe.add_argument("--out", required=True)
    transe.set_defaults(func=cmd_train_transe)

    diagnosis = train_sub.add_parser("diagnosis")
    diagnosis.add_argument("--graph", required=True)
    diagnosis.add_argument("--embeddings", required=True, help="bundle dir with embeddings")
    diagnosis.add_argument("--epochs", type=int, default=1000)
    diagnosis.add_argument("--batch", type=int, default=500)
    diagnosis.add_argument("--drop", type=float, default=0.1)
    diagnosis.add_argument("--lr", type=float, default=0.005)
    diagnosis.add_argument("--seed", type=int)
    diagnosis.add_argument("--out", required=True)
    diagnosis.set_defaults(func=cmd_train_diagnosis)

    decision = train_sub.add_parser("decision")
    decision.add_argument("--graph", required=True)
    decision.add_argument("--embeddings", required=True)
    decision.add_argument("--diagnosis", required=True)
    decision.add_argument("--epochs", type=int, default=1000)
    decision.add_argument("--batch", type=int, default=500)
    decision.add_argument("--lr", type=float, default=0.005)
    decision.add_argument("--threshold", type=float, default=0.5)
    decision.add_argument("--seed", type=int)
    decision.add_argument("--out", required=True)
    decision.set_defaults(func=cmd_train_decision)

    actor = train_sub.add_parser("actor")
    actor.add_argument("--graph", required=True)
    actor.add_argument("--models", required=True, help="bundle dir with the earlier stages")
    actor.add_argument("--episodes", type=int, default=20000)
    actor.add_argument("--lr", type=float, default=1e-3)
    actor.add_argument("--temp", type=float, default=1.0)
    actor.add_argument("--capacity", type=int, default=10000)
    actor.add_argument("--fresh-only", action="store_true",
                       help="train on each fresh episode, bypassing the replay buffer")
    actor.add_argument("--seed", type=int)
    actor.add_argument("--out", required=True)
    actor.set_defaults(func=cmd_train_actor)

    ev = sub.add_parser("eval", help="run the consultation evaluation")
    ev.add_argument("--graph", required=True)
    ev.add_argument("--models", required=True)
    ev.add_argument("--samples", type=int, default=2000)
    ev.add_argument("--drop", type=float, default=0.1)
    ev.add_argument("--max-questions", type=int, default=30)
    ev.add_argument("--seed", type=int)
    ev.add_argument("--out", help="write the JSON report here")
    ev.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--graph", required=True)
    serve.add_argument("--models", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--max-questions", type=int, default=30)
    serve.add_argument("--ui", help="static directory with the browser client build")
    serve.set_defaults(func=cmd_serve)

    consult = sub.add_parser("consult", help="interactive terminal consultation")
    consult.add_argument("--graph", required=True)
    consult.add_argument("--models", required=True)
    consult.add_argument("--max-questions", type=int, default=30)
    consult.set_defaults(func=cmd_consult)

    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, defaults: dict) -> None:
    """Push matching config keys into this parser and every subparser."""
    own = {a.dest for a in parser._actions}
    relevant = {k: v for k, v in defaults.items() if k in own}
    if relevant:
        parser.set_defaults(**relevant)
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _apply_config_defaults(sub, defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    probe, _ = parser.parse_known_args(argv)
    if probe.config:
        _apply_config_defaults(parser, load_config(probe.config))

    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    if getattr(args, "seed", None) is None:
        # subcommand --seed falls back to the global flag
        args.seed = probe.seed if probe.seed is not None else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
