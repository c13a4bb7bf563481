"""Engine state shared by the CLI and the HTTP service.

An engine owns frozen graphs, their embeddings, the active parameters and
the encoder. Everything is immutable while serving; reloading swaps the
whole engine object atomically.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from .alignment import align
from .encoder import HashNGramEncoder, NodeEmbeddings, encode_nodes
from .errors import DuplicateManual, UnknownNode
from .graph import ManualGraph
from .inference import ClueChain, InferenceParams, infer_chains
from .ingest import parse_manual
from .model import ModelParams


@dataclass
class Engine:
    encoder: HashNGramEncoder = field(default_factory=HashNGramEncoder)
    model: ModelParams | None = None
    infer_params: InferenceParams = field(default_factory=InferenceParams)
    graphs: dict[str, ManualGraph] = field(default_factory=dict)
    embeddings: dict[str, NodeEmbeddings] = field(default_factory=dict)

    def __post_init__(self):
        if self.model is None:
            self.model = ModelParams.fresh(
                dim=self.encoder.dim, encoder_fingerprint=self.encoder.fingerprint
            )

    # -- loading ---------------------------------------------------------

    def add_annotation(self, document: dict) -> str:
        graph = parse_manual(document)
        return self.add_graph(graph)

    def add_graph(self, graph: ManualGraph) -> str:
        if graph.manual_id in self.graphs:
            raise DuplicateManual(f"manual {graph.manual_id!r} already loaded")
        self.graphs[graph.manual_id] = graph
        self.embeddings[graph.manual_id] = encode_nodes(graph, self.encoder)
        return graph.manual_id

    def load_directory(self, directory: str | Path) -> list[str]:
        loaded = []
        for path in sorted(Path(directory).glob("*.graph.json")):
            graph = ManualGraph.from_json(path.read_text(encoding="utf-8"))
            loaded.append(self.add_graph(graph))
        return loaded

    def graph(self, manual_id: str) -> ManualGraph:
        try:
            return self.graphs[manual_id]
        except KeyError:
            raise UnknownNode(f"manual {manual_id!r} not loaded") from None

    # -- asking ----------------------------------------------------------

    def ask(self, manual_id: str, question: str, overrides: dict | None = None,
            include_timing: bool = True) -> dict:
        """Align the question, infer chains, and serialize with highlights."""
        if not question or not question.strip():
            raise ValueError("question must be non-empty")
        graph = self.graph(manual_id)
        embeddings = self.embeddings[manual_id]
        params = self.infer_params
        if overrides:
            params = params.override(
                delta=overrides.get("delta"),
                beam=overrides.get("beam"),
                max_depth=overrides.get("max_depth"),
            )
        started = time.perf_counter()
        result = align(question, graph, embeddings, self.model.w_align, self.encoder)
        chains = infer_chains(graph, embeddings, result, params, self.model, self.encoder)
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        response = {
            "manual_id": manual_id,
            "question": question,
            "question_clue": {
                "node": result.node,
                "text": graph.recompose(result.node),
                "spans": _spans(graph, result.node),
            },
            "alignment": {
                "score_margin": result.score_margin,
                "top": [
                    {"node": nid, "surface": graph.nodes[nid].surface, "probability": prob}
                    for nid, prob in result.top(5)
                ],
            },
            "params": {"delta": params.delta, "beam": params.beam, "max_depth": params.max_depth},
            "chains": [_serialize_chain(graph, c) for c in chains],
            "fallback": any(c.fallback for c in chains),
        }
        if include_timing:
            response["timing_ms"] = elapsed_ms
        return response


def _spans(graph: ManualGraph, node_id: int) -> list[list[int]]:
    # zero-width anchors (injected nodes) are never emitted
    return [[s, e] for s, e in sorted(graph.nodes[node_id].mention_spans) if s < e]


def _serialize_chain(graph: ManualGraph, chain: ClueChain) -> dict:
    hops = []
    highlights = [
        {"span": span, "tag": "question", "node": chain.question_node}
        for span in _spans(graph, chain.question_node)
    ]
    for i, hop in enumerate(chain.hops):
        tag = "response" if i == len(chain.hops) - 1 else "transitional"
        spans = _spans(graph, hop.node)
        hops.append(
            {
                "node": hop.node,
                "relation": hop.relation.value,
                "direction": hop.direction,
                "text": hop.clue,
                "score": hop.score,
                "spans": spans,
                "tag": tag,
            }
        )
        highlights.extend({"span": span, "tag": tag, "node": hop.node} for span in spans)
    response_hop = hops[-1]
    return {
        "kind": chain.kind,
        "fallback": chain.fallback,
        "question_clue": {
            "node": chain.question_node,
            "text": chain.question_clue,
            "spans": _spans(graph, chain.question_node),
        },
        "hops": hops,
        "response_clue": {
            "node": response_hop["node"],
            "text": response_hop["text"],
            "score": response_hop["score"],
            "spans": response_hop["spans"],
        },
        "highlights": highlights,
    }
