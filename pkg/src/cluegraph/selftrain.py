"""Self-supervised sample generation and gradient training.

Samples come for free from the graphs themselves: mask an argument node as
the answer, pick a clue node that is not directly connected to it, and
template a question from the argument's role. The scorer is then trained
with binary cross entropy to rank the masked argument above sampled
negatives when scored as the tail of a triple headed by the clue node.
"""
from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .encoder import NodeEmbeddings
from .errors import DivergenceDetected
from .graph import ManualGraph, NodeKind, RelationKind
from .model import ModelParams
from .scorer import (
    FACTUAL_BANK,
    PROCEDURAL_BANK,
    carve_filters,
    convolution_features,
    sigmoid,
)

log = logging.getLogger(__name__)

PROCEDURAL = "procedural"
FACTUAL = "factual"

#: the learning rate reported for full-scale training; desk-scale runs
#: default to 1e-3 because the hash encoder converges far faster
PAPER_LEARNING_RATE = 1e-5
DEFAULT_LEARNING_RATE = 1e-3

#: question pattern per argument role kind; the location pattern avoids
#: opening with "Where" because its character trigrams collide with "When"
DEFAULT_TEMPLATES: dict[str, str] = {
    "time": "When should the {agent} {clue}?",
    "location": "At which place should the {agent} {clue}?",
    "manner": "How should the {agent} {clue}?",
    "state": "Why can't I {clue}?",
    "other": "What should the {agent} know about {clue}?",
}


@dataclass(frozen=True)
class TrainingSample:
    graph_id: str
    question: str
    clue_node: int
    answer_node: int
    kind: str  # procedural | factual

    def to_dict(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "question": self.question,
            "clue_node": self.clue_node,
            "answer_node": self.answer_node,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingSample":
        return cls(
            graph_id=data["graph_id"],
            question=data["question"],
            clue_node=int(data["clue_node"]),
            answer_node=int(data["answer_node"]),
            kind=data["kind"],
        )


@dataclass
class TrainConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = 5
    negative_samples: int = 5
    seed: int = 0
    optimizer: str = "adam"  # adam | sgd
    init_scale: float = 0.2
    link_gain: float = 10.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.negative_samples < 1:
            raise ValueError("need at least one negative sample")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def fingerprint(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "negative_samples": self.negative_samples,
            "seed": self.seed,
            "optimizer": self.optimizer,
            "init_scale": self.init_scale,
            "link_gain": self.link_gain,
        }


# -- sample generation ----------------------------------------------------


def generate_samples(
    graph: ManualGraph,
    templates: dict[str, str] | None = None,
    rng: random.Random | None = None,
) -> list[TrainingSample]:
    """Up to one procedural and one factual sample per argument node.

    The clue node is never adjacent to the masked answer. Procedural clue
    candidates are actions reachable from the argument's parent action over
    at least one Next hop; factual candidates are non-adjacent entities.
    """
    templates = templates or DEFAULT_TEMPLATES
    rng = rng or random.Random(0)
    samples: list[TrainingSample] = []

    for arg_id in graph.ids_of_kind(NodeKind.ARGUMENT):
        adjacent = graph.adjacent_ids(arg_id)
        blocked = adjacent | {arg_id}
        candidates = [
            nid
            for nid in graph.node_ids()
            if nid not in blocked and graph.nodes[nid].kind is not NodeKind.ARGUMENT
        ]
        if not candidates:
            log.warning(
                "graph %s: argument %s is adjacent to every candidate, skipped",
                graph.manual_id, arg_id,
            )
            continue

        question = _templated_question(graph, arg_id, templates)
        anchor = _question_anchor(graph, arg_id)
        parent_action = _parent_of_kind(graph, arg_id, NodeKind.ACTION)

        procedural_pool: list[int] = []
        if parent_action is not None:
            candidate_set = set(candidates)
            procedural_pool = sorted(
                nid for nid in _next_reachable(graph, parent_action) if nid in candidate_set
            )
        if procedural_pool:
            # the question aligns with its anchor, so when the anchor is a
            # legal candidate it is the clue; otherwise one is sampled
            clue = anchor if anchor in procedural_pool else rng.choice(procedural_pool)
            samples.append(TrainingSample(graph.manual_id, question, clue, arg_id, PROCEDURAL))

        # factual candidates are everything the procedural walk cannot reach
        factual_pool = sorted(set(candidates) - set(procedural_pool))
        if factual_pool:
            clue = (
                anchor
                if anchor in factual_pool and anchor not in procedural_pool
                else rng.choice(factual_pool)
            )
            samples.append(TrainingSample(graph.manual_id, question, clue, arg_id, FACTUAL))
    return samples


def _parent_of_kind(graph: ManualGraph, arg_id: int, kind: NodeKind) -> int | None:
    owners = [
        e.src
        for e in graph.incident_edges(arg_id)
        if e.dst == arg_id
        and e.kind in (RelationKind.ACTION_ARG, RelationKind.ENTITY_ARG)
        and graph.nodes[e.src].kind is kind
    ]
    return min(owners) if owners else None


def _any_parent(graph: ManualGraph, arg_id: int) -> int | None:
    for want in (NodeKind.ACTION, NodeKind.ENTITY):
        parent = _parent_of_kind(graph, arg_id, want)
        if parent is not None:
            return parent
    return None


def _next_reachable(graph: ManualGraph, action_id: int) -> set[int]:
    """Actions at least one Next hop away, walking the chain both ways."""
    out: set[int] = set()
    for step in (graph.next_predecessor, graph.next_successor):
        cur = step(action_id)
        while cur is not None:
            out.add(cur)
            cur = step(cur)
    return out


def _templated_question(graph: ManualGraph, arg_id: int, templates: dict[str, str]) -> str:
    """Question text: the role's pattern over a bare anchor clue.

    Action-argument questions anchor on the argument's parent. State
    arguments instead anchor on the action their change affects, following
    the PATA edge to the affected entity and then to the action taking it
    as patient; that is the action a user would actually ask about. The
    anchor clue keeps only the node and its patient, so the question never
    leaks an argument surface (neither the masked answer nor a sibling).
    """
    arg = graph.nodes[arg_id]
    pattern = templates[arg.role.kind]
    anchor = _question_anchor(graph, arg_id)

    agent_surface = "User"
    clue = arg.surface
    if anchor is not None:
        agent_id = next(
            (
                e.dst
                for e in graph.incident_edges(anchor)
                if e.src == anchor and e.kind is RelationKind.AGT
            ),
            None,
        )
        if agent_id is not None:
            agent_surface = graph.nodes[agent_id].surface
        clue = _bare_clue(graph, anchor)
    return pattern.format(agent=agent_surface, clue=clue)


def _question_anchor(graph: ManualGraph, arg_id: int) -> int | None:
    arg = graph.nodes[arg_id]
    if arg.role is not None and arg.role.kind == "state":
        for e in sorted(graph.incident_edges(arg_id), key=lambda e: e.dst):
            if e.kind is RelationKind.PATA and e.src == arg_id:
                affected = e.dst
                actions = sorted(
                    p.src
                    for p in graph.incident_edges(affected)
                    if p.kind is RelationKind.PAT and p.dst == affected
                )
                if actions:
                    return actions[0]
                return affected
    return _any_parent(graph, arg_id)


def _bare_clue(graph: ManualGraph, node_id: int) -> str:
    """The node's surface plus its patient only, in span order."""
    node = graph.nodes[node_id]
    parts = [node]
    for e in graph.incident_edges(node_id):
        if e.src == node_id and e.kind is RelationKind.PAT:
            parts.append(graph.nodes[e.dst])
    parts.sort(key=lambda n: (n.span[0], n.span[1], n.id))
    return " ".join(n.surface for n in parts)


def write_samples(samples: list[TrainingSample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")


def read_samples(path) -> list[TrainingSample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TrainingSample.from_dict(json.loads(line)))
    return out


# -- loss and gradients -----------------------------------------------------


def _forward(sample, model, graph, embeddings, encoder, tails):
    """Shared forward pass; returns intermediates needed for the backward.

    The link vector is estimated from the generated question, which stands
    in for the question-clue text during training; at answer time the
    engine substitutes the aligned node's recomposed clue.
    """
    geometry = model.geometry
    clue_vec = encoder.encode(sample.question)
    head = embeddings.vector(sample.clue_node)
    diff = clue_vec - head
    link = model.w_link @ diff
    bank = PROCEDURAL_BANK if sample.kind == PROCEDURAL else FACTUAL_BANK
    filters = carve_filters(link, geometry, bank)
    pre, feat, windows = convolution_features(head, filters, geometry)
    u = model.w_score @ feat + model.b_score
    v = np.maximum(u, 0.0)
    zs = np.array([float(v @ embeddings.vector(t)) for t in tails])
    return {
        "diff": diff, "bank": bank, "pre": pre, "feat": feat,
        "windows": windows, "u": u, "v": v, "zs": zs,
    }


def _bce(zs: np.ndarray) -> float:
    # first logit is the answer, the rest are negatives; softplus keeps the
    # log terms stable for large magnitudes
    def softplus(x: float) -> float:
        return max(x, 0.0) + math.log1p(math.exp(-abs(x)))

    return softplus(-zs[0]) + float(sum(softplus(z) for z in zs[1:]))


def loss(sample, model, graph, embeddings, encoder, negatives) -> float:
    """Binary cross entropy of the answer against the sampled negatives."""
    state = _forward(sample, model, graph, embeddings, encoder,
                     [sample.answer_node] + list(negatives))
    return _bce(state["zs"])


def gradients(sample, model, graph, embeddings, encoder, negatives):
    """Analytic gradients of the loss for every trainable matrix.

    The alignment projection w_align does not appear in the triple loss,
    so its gradient is identically zero; it is reported anyway so the
    optimizer can treat all parameters uniformly.
    """
    tails = [sample.answer_node] + list(negatives)
    state = _forward(sample, model, graph, embeddings, encoder, tails)
    geometry = model.geometry
    zs, u, v, feat = state["zs"], state["u"], state["v"], state["feat"]

    g_z = np.array([sigmoid(z) for z in zs])
    g_z[0] -= 1.0

    g_v = np.zeros_like(v)
    for gz, tail in zip(g_z, tails):
        g_v += gz * embeddings.vector(tail)
    g_u = g_v * (u > 0)  # ReLU subgradient at 0 taken as 0

    g_w_score = np.outer(g_u, feat)
    g_b_score = g_u.copy()

    g_feat = model.w_score.T @ g_u
    g_maps = g_feat.reshape(geometry.filters_per_bank, geometry.conv_h, geometry.conv_w)
    g_maps = g_maps * (state["pre"] > 0)
    g_filters = np.einsum("ijkl,fij->fkl", state["windows"], g_maps)

    g_link = np.zeros(geometry.link_dim)
    lo = state["bank"] * geometry.bank_size
    g_link[lo : lo + geometry.bank_size] = g_filters.reshape(-1)
    g_w_link = np.outer(g_link, state["diff"])

    return {
        "loss": _bce(zs),
        "w_align": np.zeros_like(model.w_align),
        "w_link": g_w_link,
        "w_score": g_w_score,
        "b_score": g_b_score,
    }


# -- training loop ----------------------------------------------------------


class _Adam:
    def __init__(self, shapes: dict[str, tuple], lr: float,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1 ** self.t)
            v_hat = self.v[k] / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train(
    samples: list[TrainingSample],
    graphs: dict[str, ManualGraph],
    embeddings: dict[str, NodeEmbeddings],
    encoder,
    config: TrainConfig,
    initial: ModelParams | None = None,
) -> tuple[ModelParams, list[float]]:
    """Deterministic training given (seed, data, config).

    Returns the trained parameters and the per-epoch mean loss trace.
    Raises DivergenceDetected (carrying the last finite state) if the loss
    ever goes non-finite.
    """
    if not samples:
        raise ValueError("no training samples")
    rng = random.Random(config.seed)
    model = (initial or ModelParams.seeded(
        config.seed, dim=encoder.dim, encoder_fingerprint=encoder.fingerprint,
        scale=config.init_scale, link_gain=config.link_gain,
    )).copy()
    model.encoder_fingerprint = encoder.fingerprint
    model.train_config = config.fingerprint()

    tensors = {"w_align": model.w_align, "w_link": model.w_link,
               "w_score": model.w_score, "b_score": model.b_score}
    optimizer = _Adam({k: t.shape for k, t in tensors.items()}, config.learning_rate) \
        if config.optimizer == "adam" else None

    trace: list[float] = []
    last_good = model.copy()
    order = list(range(len(samples)))
    for _ in range(config.epochs):
        rng.shuffle(order)
        total = 0.0
        for idx in order:
            sample = samples[idx]
            graph = graphs[sample.graph_id]
            emb = embeddings[sample.graph_id]
            negatives = _draw_negatives(graph, sample, config.negative_samples, rng)
            grads = gradients(sample, model, graph, emb, encoder, negatives)
            if not math.isfinite(grads["loss"]):
                raise DivergenceDetected(
                    f"non-finite loss on sample {sample.graph_id}/{sample.answer_node}",
                    params=last_good, trace=trace,
                )
            total += grads["loss"]
            if optimizer is not None:
                optimizer.step(tensors, grads)
            else:
                for k, t in tensors.items():
                    t -= config.learning_rate * grads[k]
        epoch_mean = total / len(samples)
        if not math.isfinite(epoch_mean) or not model.all_finite():
            raise DivergenceDetected("parameters went non-finite", params=last_good, trace=trace)
        trace.append(epoch_mean)
        last_good = model.copy()
    return model, trace


def _draw_negatives(graph: ManualGraph, sample: TrainingSample, k: int,
                    rng: random.Random) -> list[int]:
    pool = [nid for nid in graph.node_ids() if nid != sample.answer_node]
    if len(pool) <= k:
        return pool
    return rng.sample(pool, k)


def zero_baseline_loss(negative_samples: int) -> float:
    """Loss with an all-zero scorer: every score is exactly one half."""
    return (1 + negative_samples) * math.log(2.0)


def retrieval_accuracy(
    samples: list[TrainingSample],
    model: ModelParams,
    graphs: dict[str, ManualGraph],
    embeddings: dict[str, NodeEmbeddings],
    encoder,
) -> float:
    """Top-1 accuracy of ranking every node of the graph as the tail."""
    if not samples:
        return 0.0
    hits = 0
    for sample in samples:
        graph = graphs[sample.graph_id]
        emb = embeddings[sample.graph_id]
        tails = graph.node_ids()
        state = _forward(sample, model, graph, emb, encoder, tails)
        best = max(zip(state["zs"], [-t for t in tails]))  # ties: smaller id
        if -best[1] == sample.answer_node:
            hits += 1
    return hits / len(samples)


def uniform_baseline(samples: list[TrainingSample], graphs: dict[str, ManualGraph]) -> float:
    """Expected top-1 accuracy of uniform random guessing."""
    if not samples:
        return 0.0
    return sum(1.0 / len(graphs[s.graph_id].nodes) for s in samples) / len(samples)
