"""Map a free-text question onto its question-clue node."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import NodeEmbeddings, project_question
from .errors import EmptyGraph, EncoderMismatch
from .graph import ManualGraph, NodeKind


@dataclass
class AlignmentResult:
    node: int
    distribution: dict[int, float]
    score_margin: float  # top-1 minus top-2 probability

    def top(self, k: int = 5) -> list[tuple[int, float]]:
        ranked = sorted(self.distribution.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:k]


def align(
    question: str,
    graph: ManualGraph,
    embeddings: NodeEmbeddings,
    w: np.ndarray,
    encoder,
    restrict_kinds: tuple[NodeKind, ...] | None = None,
) -> AlignmentResult:
    """Pick the node most similar to the question.

    Scores are dot products between fused node vectors and the projected
    question; the distribution is a softmax over all candidates. Ties go to
    the smallest node id. ``restrict_kinds`` optionally narrows candidates,
    e.g. to actions and entities.
    """
    if encoder.fingerprint != embeddings.fingerprint:
        raise EncoderMismatch(
            f"embeddings built under {embeddings.fingerprint!r}, "
            f"got encoder {encoder.fingerprint!r}"
        )
    candidates = graph.node_ids()
    if restrict_kinds is not None:
        allowed = set(restrict_kinds)
        candidates = [nid for nid in candidates if graph.nodes[nid].kind in allowed]
    if not candidates:
        raise EmptyGraph(f"no candidate nodes in graph {graph.manual_id!r}")

    projected = project_question(w, encoder.encode(question))
    scores = np.array([float(embeddings.vector(nid) @ projected) for nid in candidates])

    shifted = np.exp(scores - scores.max())
    probs = shifted / shifted.sum()

    best_idx = 0
    for i in range(1, len(candidates)):
        if probs[i] > probs[best_idx]:  # strict: earlier (smaller) id wins ties
            best_idx = i
    margin = 0.0
    if len(candidates) > 1:
        rest = np.delete(probs, best_idx)
        margin = float(probs[best_idx] - rest.max())

    return AlignmentResult(
        node=candidates[best_idx],
        distribution={nid: float(p) for nid, p in zip(candidates, probs)},
        score_margin=margin,
    )
