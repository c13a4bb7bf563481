"""Beam inference from the question-clue node to scored clue chains.

Two beams run side by side: the procedural beam walks Next edges (either
direction) and the factual beam walks every other relation. Each frontier
node is scored as the tail of a triple headed by the question-clue node,
using the filter bank of the edge just traversed. A path ends successfully
the moment its frontier clears the plausibility threshold; if nothing
succeeds anywhere, the single best-scoring visited node is returned as an
explicitly flagged fallback.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .alignment import AlignmentResult
from .encoder import NodeEmbeddings
from .errors import EncoderMismatch, UnknownNode
from .graph import ManualGraph, RelationKind
from .model import ModelParams
from .scorer import bank_for_relation, link_info, score_triple

PROCEDURAL = "procedural"
FACTUAL = "factual"


@dataclass(frozen=True)
class InferenceParams:
    delta: float = 0.5
    beam: int = 4
    max_depth: int = 3

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.beam < 1:
            raise ValueError("beam must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")

    def override(self, delta=None, beam=None, max_depth=None) -> "InferenceParams":
        return replace(
            self,
            delta=self.delta if delta is None else delta,
            beam=self.beam if beam is None else beam,
            max_depth=self.max_depth if max_depth is None else max_depth,
        )


@dataclass(frozen=True)
class ChainHop:
    node: int
    relation: RelationKind
    direction: str  # forward | backward | self
    clue: str
    score: float


@dataclass
class ClueChain:
    kind: str  # procedural | factual
    question_node: int
    question_clue: str
    hops: list[ChainHop]
    fallback: bool = False

    @property
    def response(self) -> ChainHop:
        return self.hops[-1]

    @property
    def score(self) -> float:
        return self.response.score

    def node_path(self) -> list[int]:
        return [self.question_node] + [h.node for h in self.hops]


@dataclass
class _Path:
    hops: list[ChainHop] = field(default_factory=list)

    @property
    def end(self) -> ChainHop:
        return self.hops[-1]


def infer_chains(
    graph: ManualGraph,
    embeddings: NodeEmbeddings,
    alignment: AlignmentResult,
    params: InferenceParams,
    model: ModelParams,
    encoder,
) -> list[ClueChain]:
    """All successfully terminated chains, deduplicated by response node and
    sorted by score (ties: shorter chain, smaller node id)."""
    if encoder.fingerprint != embeddings.fingerprint:
        raise EncoderMismatch("embeddings and encoder fingerprints differ")
    nq = alignment.node
    if nq not in graph.nodes:
        raise UnknownNode(f"aligned node {nq} not in graph")

    question_clue = graph.recompose(nq)
    head = embeddings.vector(nq)
    link = link_info(encoder.encode(question_clue), head, model.w_link)

    score_cache: dict[tuple[int, int], float] = {}

    def scored(tail: int, relation: RelationKind) -> float:
        key = (tail, bank_for_relation(relation))
        if key not in score_cache:
            score_cache[key] = score_triple(
                head, link, embeddings.vector(tail), relation,
                model.w_score, model.b_score, model.geometry,
            )
        return score_cache[key]

    finished: list[ClueChain] = []
    best_seen: tuple[float, int, int, str, _Path] | None = None  # score, len, node, kind, path

    def consider_best(kind: str, path: _Path):
        nonlocal best_seen
        hop = path.end
        key = (hop.score, -len(path.hops), -hop.node)
        if best_seen is None or key > (best_seen[0], -best_seen[1], -best_seen[2]):
            best_seen = (hop.score, len(path.hops), hop.node, kind, path)

    # the self-loop covers the case where the question clue answers itself;
    # it is scored first, with the factual bank
    self_score = scored(nq, RelationKind.SELF_LOOP)
    self_path = _Path([ChainHop(nq, RelationKind.SELF_LOOP, "self", question_clue, self_score)])
    if self_score >= params.delta:
        finished.append(ClueChain(FACTUAL, nq, question_clue, self_path.hops))
    consider_best(FACTUAL, self_path)

    for kind in (PROCEDURAL, FACTUAL):
        _run_beam(kind, graph, params, nq, question_clue, scored, finished, consider_best)

    finished.sort(key=lambda c: (-c.score, len(c.hops), c.response.node))
    unique: list[ClueChain] = []
    seen_responses: set[int] = set()
    for chain in finished:
        if chain.response.node not in seen_responses:
            seen_responses.add(chain.response.node)
            unique.append(chain)

    if not unique and best_seen is not None:
        _, _, _, kind, path = best_seen
        unique.append(ClueChain(kind, nq, question_clue, path.hops, fallback=True))
    return unique


def _run_beam(kind, graph, params, nq, question_clue, scored, finished, consider_best):
    """Level-synchronized beam over one path family.

    Paths are implicitly deduplicated by frontier node (a per-beam visited
    set), so scores never depend on which of several equal-length routes
    reached a node first. With a beam at least as wide as the graph this
    makes the search exhaustive.
    """
    procedural = kind == PROCEDURAL
    visited: set[int] = {nq}
    frontier: list[_Path] = [_Path()]

    for _ in range(params.max_depth):
        candidates: list[_Path] = []
        for path in frontier:
            current = path.hops[-1].node if path.hops else nq
            for edge in sorted(
                graph.incident_edges(current), key=lambda e: (min(e.src, e.dst), e.kind.value)
            ):
                if (edge.kind is RelationKind.NEXT) != procedural:
                    continue
                other = edge.dst if edge.src == current else edge.src
                if other in visited:
                    continue
                visited.add(other)
                direction = "forward" if edge.src == current else "backward"
                hop = ChainHop(other, edge.kind, direction, graph.recompose(other), scored(other, edge.kind))
                candidates.append(_Path(path.hops + [hop]))

        candidates.sort(key=lambda p: (-p.end.score, len(p.hops), p.end.node))
        frontier = []
        for path in candidates:
            consider_best(kind, path)
            if path.end.score >= params.delta:
                finished.append(ClueChain(kind, nq, question_clue, path.hops))
            elif len(frontier) < params.beam:
                frontier.append(path)
        if not frontier:
            break
