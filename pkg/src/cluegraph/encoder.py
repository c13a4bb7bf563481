"""Deterministic text encoding and two-path node-embedding fusion.

Every node gets a base vector from the clue text it recomposes to. A
node's procedural and factual neighbor sets are averaged into two set
embeddings, which are blended by attention weights derived from the
graph-wide ratio of procedural to factual mass. The result is one fused
vector per node that carries both kinds of context.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .graph import ManualGraph

#: division guard in the fusion ratio denominators
EPS = 1e-8

DEFAULT_DIM = 128
DEFAULT_SEED = 3


class HashNGramEncoder:
    """Feature-hashed set of character 1..3-grams, L2-normalized.

    Each distinct n-gram lands once in a signed bucket, weighted by
    2^(n-1) so longer grams carry more signal than ubiquitous single
    characters. Fully deterministic and offline: the same text maps to the
    same unit vector on every run and platform. The empty string is the
    single non-unit output (the zero vector).
    """

    def __init__(self, dim: int = DEFAULT_DIM, ngram_range: tuple[int, int] = (1, 3),
                 seed: int = DEFAULT_SEED):
        if dim < 1:
            raise ValueError("dim must be positive")
        lo, hi = ngram_range
        if not (1 <= lo <= hi):
            raise ValueError("bad ngram range")
        self.dim = dim
        self.ngram_range = (lo, hi)
        self.seed = seed
        self._salt = f"{seed}|".encode()

    @property
    def fingerprint(self) -> str:
        lo, hi = self.ngram_range
        return f"hash-ngram:d{self.dim}:n{lo}-{hi}:w2:s{self.seed}"

    def _bucket(self, gram: str) -> tuple[int, float]:
        digest = hashlib.blake2b(self._salt + gram.encode("utf-8"), digest_size=8).digest()
        h = int.from_bytes(digest, "big")
        return h % self.dim, 1.0 if (h >> 62) & 1 else -1.0

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        lo, hi = self.ngram_range
        for n in range(lo, hi + 1):
            weight = float(2 ** (n - lo))
            seen: set[str] = set()
            for i in range(len(text) - n + 1):
                gram = text[i : i + n]
                if gram in seen:
                    continue
                seen.add(gram)
                bucket, sign = self._bucket(gram)
                vec[bucket] += sign * weight
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            return vec / norm
        if text:
            # signs cancelled exactly; fall back to a one-hot so non-empty
            # text always yields a unit vector
            bucket, _ = self._bucket(text)
            vec[bucket] = 1.0
        return vec


@dataclass
class NodeEmbeddings:
    """Per-node fusion products for one frozen graph."""

    fingerprint: str
    dim: int
    base: dict[int, np.ndarray]
    set_procedural: dict[int, np.ndarray]
    set_factual: dict[int, np.ndarray]
    alpha: dict[int, tuple[float, float]]
    vectors: dict[int, np.ndarray]

    def vector(self, node_id: int) -> np.ndarray:
        return self.vectors[node_id]

    def to_dump(self) -> dict:
        return {str(nid): [float(x) for x in vec] for nid, vec in sorted(self.vectors.items())}


def _canonical_order(graph: ManualGraph) -> list[int]:
    # independent of insertion order so summation is bit-stable
    def key(nid: int):
        n = graph.nodes[nid]
        role = n.role.encode() if n.role else ""
        return (n.kind.value, n.span[0], n.span[1], n.surface, role, n.id)

    return sorted(graph.nodes, key=key)


def encode_nodes(graph: ManualGraph, encoder) -> NodeEmbeddings:
    """Fuse procedural and factual context into one vector per node.

    The attention pair (alpha_p, alpha_f) is a two-way softmax over scalar
    logits obtained by per-dimension mean of the elementwise ratios
    sum_p / (sum_p + sum_f + eps), where sum_p and sum_f total the set
    embeddings over the whole graph. Nodes with one empty neighbor set get
    the full weight on the other side; nodes with both sets empty keep
    their base vector.
    """
    order = _canonical_order(graph)
    base = {nid: encoder.encode(graph.recompose(nid)) for nid in order}
    pos = {nid: i for i, nid in enumerate(order)}

    set_p: dict[int, np.ndarray] = {}
    set_f: dict[int, np.ndarray] = {}
    p_alone: dict[int, bool] = {}
    f_alone: dict[int, bool] = {}
    for nid in order:
        members_p = sorted(graph.procedural_neighbors(nid), key=pos.__getitem__)
        members_f = sorted(graph.factual_neighbors(nid), key=pos.__getitem__)
        p_alone[nid] = len(members_p) == 1
        f_alone[nid] = len(members_f) == 1
        set_p[nid] = np.mean(np.stack([base[m] for m in members_p]), axis=0)
        set_f[nid] = np.mean(np.stack([base[m] for m in members_f]), axis=0)

    if order:
        total_p = np.sum(np.stack([set_p[n] for n in order]), axis=0)
        total_f = np.sum(np.stack([set_f[n] for n in order]), axis=0)
        denom = total_p + total_f + EPS
        logit_p = float(np.mean(total_p / denom))
        logit_f = float(np.mean(total_f / denom))
        alpha_p_global = _two_way_softmax(logit_p, logit_f)
    else:
        alpha_p_global = 0.5

    alpha: dict[int, tuple[float, float]] = {}
    vectors: dict[int, np.ndarray] = {}
    for nid in order:
        if p_alone[nid] and f_alone[nid]:
            a_p, a_f = 0.5, 0.5
            vectors[nid] = base[nid].copy()
        else:
            if p_alone[nid]:
                a_p, a_f = 0.0, 1.0
            elif f_alone[nid]:
                a_p, a_f = 1.0, 0.0
            else:
                a_p = alpha_p_global
                a_f = 1.0 - a_p
            vectors[nid] = a_p * set_p[nid] + a_f * set_f[nid]
        alpha[nid] = (a_p, a_f)

    return NodeEmbeddings(
        fingerprint=encoder.fingerprint,
        dim=encoder.dim,
        base=base,
        set_procedural=set_p,
        set_factual=set_f,
        alpha=alpha,
        vectors=vectors,
    )


def _two_way_softmax(logit_a: float, logit_b: float) -> float:
    # stable logistic of (a - b); the pair sums to 1 exactly because the
    # complement is taken as 1 - alpha
    d = logit_b - logit_a
    if d >= 0:
        return math.exp(-d) / (1.0 + math.exp(-d)) if d < 700 else 0.0
    return 1.0 / (1.0 + math.exp(d))


def project_question(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Project a question vector into graph space."""
    w = np.asarray(w)
    q = np.asarray(q)
    if w.ndim != 2 or q.ndim != 1 or w.shape[1] != q.shape[0]:
        raise DimensionMismatch(f"cannot multiply {w.shape} by {q.shape}")
    return w @ q
