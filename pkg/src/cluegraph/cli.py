"""Command-line surface: ingest | gen-data | train | align | infer | eval | serve.

Machine-readable JSON goes to stdout, logs to stderr. Exit codes: 0 on
success, 1 on domain errors, 2 on usage errors.
"""
from __future__ import annotations

import json
import logging
import random
import sys
from pathlib import Path

import click

from . import selftrain
from .alignment import align as align_op
from .encoder import HashNGramEncoder, encode_nodes
from .engine import Engine
from .errors import CluegraphError
from .graph import ManualGraph
from .inference import InferenceParams, infer_chains
from .ingest import load_annotation, parse_manual
from .metrics import evaluate_corpus, rouge_l, bleu, tokenize
from .model import ModelParams

log = logging.getLogger("cluegraph")


def _emit(payload) -> None:
    click.echo(json.dumps(payload, ensure_ascii=False, indent=2))


def _load_graph(path: str) -> ManualGraph:
    return ManualGraph.from_json(Path(path).read_text(encoding="utf-8"))


def _load_model(path: str | None, encoder: HashNGramEncoder) -> ModelParams:
    if path:
        return ModelParams.load(path)
    return ModelParams.fresh(dim=encoder.dim, encoder_fingerprint=encoder.fingerprint)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="debug logging on stderr")
def main(verbose: bool):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="annotation file (JSON or YAML)")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="graph JSON output")
def ingest(in_path: str, out_path: str):
    """Parse one annotated manual into a frozen graph file."""
    graph = parse_manual(load_annotation(in_path))
    Path(out_path).write_text(graph.to_json(), encoding="utf-8")
    for warning in graph.warnings:
        log.warning("%s", warning)
    _emit({
        "manual_id": graph.manual_id,
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "warnings": graph.warnings,
        "out": out_path,
    })


@main.command("gen-data")
@click.option("--graphs", "graphs_dir", required=True, type=click.Path(exists=True),
              help="directory of *.graph.json files")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def gen_data(graphs_dir: str, seed: int, out_path: str):
    """Generate masked-argument training samples from every graph."""
    rng = random.Random(seed)
    samples = []
    for path in sorted(Path(graphs_dir).glob("*.graph.json")):
        graph = _load_graph(str(path))
        samples.extend(selftrain.generate_samples(graph, rng=rng))
    selftrain.write_samples(samples, out_path)
    _emit({"samples": len(samples), "seed": seed, "out": out_path})


@main.command()
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True))
@click.option("--graphs", "graphs_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="TrainConfig JSON; flags override its fields")
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None, help="learning rate")
@click.option("--paper-lr", is_flag=True,
              help=f"use the published learning rate {selftrain.PAPER_LEARNING_RATE}")
@click.option("--negatives", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--optimizer", type=click.Choice(["adam", "sgd"]), default=None)
@click.option("--report-dir", type=click.Path(), default=None,
              help="write loss_trace.csv and loss_curve.png here")
def train(samples_path, graphs_dir, out_path, config_path, epochs, lr, paper_lr,
          negatives, seed, optimizer, report_dir):
    """Train scorer parameters on generated samples."""
    raw = json.loads(Path(config_path).read_text(encoding="utf-8")) if config_path else {}
    if epochs is not None:
        raw["epochs"] = epochs
    if lr is not None:
        raw["learning_rate"] = lr
    if paper_lr:
        raw["learning_rate"] = selftrain.PAPER_LEARNING_RATE
    if negatives is not None:
        raw["negative_samples"] = negatives
    if seed is not None:
        raw["seed"] = seed
    if optimizer is not None:
        raw["optimizer"] = optimizer
    config = selftrain.TrainConfig(**raw)

    encoder = HashNGramEncoder()
    samples = selftrain.read_samples(samples_path)
    graphs, embeddings = {}, {}
    for path in sorted(Path(graphs_dir).glob("*.graph.json")):
        graph = _load_graph(str(path))
        graphs[graph.manual_id] = graph
        embeddings[graph.manual_id] = encode_nodes(graph, encoder)

    model, trace = selftrain.train(samples, graphs, embeddings, encoder, config)
    model.save(out_path)
    if report_dir:
        from .reporting import write_train_report

        baseline = selftrain.zero_baseline_loss(config.negative_samples)
        for p in write_train_report(trace, baseline, report_dir):
            log.info("wrote %s", p)
    _emit({
        "samples": len(samples),
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "loss_trace": trace,
        "out": out_path,
    })


@main.command("align")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--question", required=True)
@click.option("--params", "params_path", type=click.Path(exists=True), default=None)
@click.option("--dump-embeddings", "dump_path", type=click.Path(), default=None,
              help="write the fused node vectors as JSON for debugging")
def align_cmd(graph_path, question, params_path, dump_path):
    """Print the question-clue node and the top-5 candidates."""
    encoder = HashNGramEncoder()
    graph = _load_graph(graph_path)
    embeddings = encode_nodes(graph, encoder)
    if dump_path:
        Path(dump_path).write_text(json.dumps(embeddings.to_dump()), encoding="utf-8")
    model = _load_model(params_path, encoder)
    result = align_op(question, graph, embeddings, model.w_align, encoder)
    _emit({
        "question": question,
        "node": result.node,
        "surface": graph.nodes[result.node].surface,
        "clue": graph.recompose(result.node),
        "score_margin": result.score_margin,
        "top": [
            {
                "node": nid,
                "surface": graph.nodes[nid].surface,
                "clue": graph.recompose(nid),
                "probability": prob,
            }
            for nid, prob in result.top(5)
        ],
    })


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--params", "params_path", type=click.Path(exists=True), default=None)
@click.option("--question", required=True)
@click.option("--delta", type=float, default=None)
@click.option("--beam", type=int, default=None)
@click.option("--max-depth", type=int, default=None)
def infer(graph_path, params_path, question, delta, beam, max_depth):
    """Emit scored clue chains with highlight spans for one question."""
    encoder = HashNGramEncoder()
    graph = _load_graph(graph_path)
    engine = Engine(encoder=encoder, model=_load_model(params_path, encoder))
    engine.add_graph(graph)
    overrides = {"delta": delta, "beam": beam, "max_depth": max_depth}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    response = engine.ask(graph.manual_id, question, overrides=overrides, include_timing=False)
    _emit(response)


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True),
              help="JSONL of {\"text\": ...} predictions")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--beta", type=float, default=8.0, show_default=True)
@click.option("--smoothing", is_flag=True, help="add-one smoothing for n-gram precision")
@click.option("--embed-sim", "with_embed_sim", is_flag=True,
              help="include the greedy embed_sim score (not a contextual metric)")
@click.option("--report-dir", type=click.Path(), default=None,
              help="write pairs.csv and metrics.png here")
def eval_cmd(pred_path, gold_path, out_path, beta, smoothing, with_embed_sim, report_dir):
    """Score predictions against references."""
    preds = _read_texts(pred_path)
    golds = _read_texts(gold_path)
    if len(preds) != len(golds):
        raise CluegraphError(
            f"prediction count {len(preds)} != reference count {len(golds)}"
        )
    pairs = list(zip(preds, golds))
    encoder = HashNGramEncoder() if with_embed_sim else None
    report = evaluate_corpus(pairs, beta=beta, smoothing=smoothing, encoder=encoder)
    Path(out_path).write_text(
        json.dumps(report.to_dict(), ensure_ascii=False, indent=2), encoding="utf-8"
    )
    if report_dir:
        from .reporting import write_eval_report

        rows = []
        for i, (cand_text, ref_text) in enumerate(pairs):
            cand, ref = tokenize(cand_text), tokenize(ref_text)
            row = {"index": i, "candidate": cand_text, "reference": ref_text}
            for n in range(1, 5):
                row[f"bleu_{n}"] = bleu(cand, ref, max_n=n, smoothing=smoothing)
            r = rouge_l(cand, ref, beta=beta)
            row["rouge_l"] = "" if r is None else r
            rows.append(row)
        for p in write_eval_report(rows, report, report_dir):
            log.info("wrote %s", p)
    _emit(report.to_dict())


def _read_texts(path: str) -> list[str]:
    texts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                texts.append(json.loads(line)["text"])
    return texts


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None,
              help="defaults to $CARE_PORT or 8000; 0 binds an ephemeral port")
@click.option("--data-dir", type=click.Path(), default=None,
              help="defaults to $CARE_DATA_DIR; loads *.graph.json and persists ingests")
@click.option("--params", "params_path", type=click.Path(exists=True), default=None)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="serve this directory of static assets at /ui")
def serve(host, port, data_dir, params_path, ui_dir):
    """Run the HTTP service."""
    import os

    from .service import ENV_DATA_DIR, serve as run_service

    encoder = HashNGramEncoder()
    engine = Engine(encoder=encoder, model=_load_model(params_path, encoder))
    data_dir = data_dir or os.environ.get(ENV_DATA_DIR)
    if data_dir and Path(data_dir).is_dir():
        for manual_id in engine.load_directory(data_dir):
            log.info("loaded manual %s", manual_id)
    run_service(engine, host=host, port=port, data_dir=data_dir, ui_dir=ui_dir)


def entrypoint():
    try:
        main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.UsageError as err:
        err.show(file=sys.stderr)
        sys.exit(2)
    except click.exceptions.Exit as err:
        sys.exit(err.exit_code)
    except (CluegraphError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
