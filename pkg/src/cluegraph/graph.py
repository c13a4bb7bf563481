"""Heterogeneous manual graph: typed nodes and edges, neighbor sets, clue recomposition.

A manual graph holds three node kinds (Action, Entity, Argument) joined by
typed relations. Next edges chain the steps of a procedure; every other
relation carries factual structure (agents, patients, arguments, states,
sub-entities). Graphs are mutable while being built, then frozen; a frozen
graph is immutable and safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    DuplicateEdge,
    FrozenGraph,
    KindConstraintViolated,
    NextCycle,
    RoleMismatch,
    SpanOutOfBounds,
    UnknownNode,
)

Span = tuple[int, int]


class NodeKind(str, Enum):
    ACTION = "Action"
    ENTITY = "Entity"
    ARGUMENT = "Argument"


class RelationKind(str, Enum):
    NEXT = "Next"
    AGT = "AGT"
    PAT = "PAT"
    PATA = "PATA"
    SUB = "SUB"
    ACTION_ARG = "ActionArg"
    ENTITY_ARG = "EntityArg"
    ARG_ARG = "ArgArg"
    SELF_LOOP = "SelfLoop"  # transient, used only while answering a question


#: Relations that may appear on factual paths (everything except Next;
#: SelfLoop never lives in a stored graph).
FACTUAL_RELATIONS = frozenset(
    k for k in RelationKind if k not in (RelationKind.NEXT, RelationKind.SELF_LOOP)
)


@dataclass(frozen=True)
class ArgumentRole:
    """Role of an argument node; free-form roles use kind 'other' plus a label."""

    kind: str
    label: str | None = None

    _KNOWN = ("time", "location", "manner", "state", "other")

    def __post_init__(self):
        if self.kind not in self._KNOWN:
            raise ValueError(f"unknown argument role {self.kind!r}")
        if self.label is not None and self.kind != "other":
            raise ValueError("only 'other' roles carry a label")

    @classmethod
    def other(cls, label: str) -> "ArgumentRole":
        return cls("other", label)

    def encode(self) -> str:
        if self.kind == "other" and self.label:
            return f"other:{self.label}"
        return self.kind

    @classmethod
    def parse(cls, raw: str) -> "ArgumentRole":
        if raw.startswith("other:"):
            return cls("other", raw.split(":", 1)[1])
        return cls(raw)


TIME = ArgumentRole("time")
LOCATION = ArgumentRole("location")
MANNER = ArgumentRole("manner")
STATE = ArgumentRole("state")


@dataclass
class Node:
    id: int
    kind: NodeKind
    surface: str
    span: Span
    role: ArgumentRole | None = None
    #: every place this node is mentioned in the text, for highlighting;
    #: empty for injected nodes that have no textual anchor
    mention_spans: list[Span] = field(default_factory=list)


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: RelationKind

    def key(self) -> tuple[int, int, str]:
        return (self.src, self.dst, self.kind.value)


# endpoint-kind table: relation -> (source kind, destination kind)
_ENDPOINTS = {
    RelationKind.NEXT: (NodeKind.ACTION, NodeKind.ACTION),
    RelationKind.AGT: (NodeKind.ACTION, NodeKind.ENTITY),
    RelationKind.PAT: (NodeKind.ACTION, NodeKind.ENTITY),
    RelationKind.ACTION_ARG: (NodeKind.ACTION, NodeKind.ARGUMENT),
    RelationKind.ENTITY_ARG: (NodeKind.ENTITY, NodeKind.ARGUMENT),
    RelationKind.SUB: (NodeKind.ENTITY, NodeKind.ENTITY),
    RelationKind.PATA: (NodeKind.ARGUMENT, NodeKind.ENTITY),
    RelationKind.ARG_ARG: (NodeKind.ARGUMENT, NodeKind.ARGUMENT),
}

#: relations whose targets are folded into a node's readable clue text
_RECOMPOSE_RELATIONS = (
    RelationKind.AGT,
    RelationKind.PAT,
    RelationKind.ACTION_ARG,
    RelationKind.ENTITY_ARG,
)


class ManualGraph:
    """One manual's text plus its node/edge structure."""

    def __init__(self, manual_id: str, text: str):
        self.manual_id = manual_id
        self.text = text
        self.nodes: dict[int, Node] = {}
        self.edges: list[Edge] = []
        self.frozen = False
        self.warnings: list[str] = []
        self._edge_keys: set[tuple[int, int, str]] = set()
        self._adjacency: dict[int, list[Edge]] = {}
        self._next_id = 0

    # -- construction -------------------------------------------------

    def _guard_mutation(self):
        if self.frozen:
            raise FrozenGraph(f"graph {self.manual_id!r} is frozen")

    def add_node(
        self,
        kind: NodeKind,
        surface: str,
        span: Span,
        role: ArgumentRole | None = None,
        mention_spans: list[Span] | None = None,
    ) -> int:
        """Insert a node and return its fresh id.

        The span must fit in the text (zero-width spans mark injected nodes
        with no textual anchor). A role is required for Argument nodes and
        forbidden elsewhere.
        """
        self._guard_mutation()
        start, end = span
        if not (0 <= start <= end <= len(self.text)):
            raise SpanOutOfBounds(
                f"span [{start},{end}) outside text of length {len(self.text)}"
            )
        if not surface:
            raise ValueError("node surface must be non-empty")
        if (role is not None) != (kind is NodeKind.ARGUMENT):
            raise RoleMismatch(
                f"role {'missing from' if role is None else 'given for'} {kind.value} node {surface!r}"
            )
        node_id = self._next_id
        self._next_id += 1
        if mention_spans is None:
            mention_spans = [span] if start < end else []
        self.nodes[node_id] = Node(node_id, kind, surface, (start, end), role, list(mention_spans))
        self._adjacency[node_id] = []
        return node_id

    def add_edge(self, src: int, dst: int, kind: RelationKind) -> Edge:
        """Insert a typed edge after checking the endpoint-kind table."""
        self._guard_mutation()
        s = self._require(src)
        d = self._require(dst)
        if kind is RelationKind.SELF_LOOP:
            raise KindConstraintViolated("SelfLoop edges exist only transiently at inference time")
        if src == dst:
            raise KindConstraintViolated("self edges are not allowed in a stored graph")
        want = _ENDPOINTS[kind]
        if (s.kind, d.kind) != want:
            raise KindConstraintViolated(
                f"{kind.value} requires {want[0].value} -> {want[1].value}, "
                f"got {s.kind.value} -> {d.kind.value}"
            )
        if kind is RelationKind.PATA and (s.role is None or s.role.kind != "state"):
            raise KindConstraintViolated("PATA source must be a state argument")
        edge = Edge(src, dst, kind)
        if edge.key() in self._edge_keys:
            raise DuplicateEdge(f"duplicate edge {edge.key()}")
        if kind is RelationKind.NEXT:
            self._check_next(src, dst)
        if kind is RelationKind.SUB:
            self._check_sub(src, dst)
        self.edges.append(edge)
        self._edge_keys.add(edge.key())
        self._adjacency[src].append(edge)
        self._adjacency[dst].append(edge)
        return edge

    def _check_next(self, src: int, dst: int):
        # procedure chains are simple paths: at most one Next out of src,
        # one Next into dst, and no cycle back to src
        if self.next_successor(src) is not None:
            raise KindConstraintViolated(f"node {src} already has an outgoing Next edge")
        if self.next_predecessor(dst) is not None:
            raise KindConstraintViolated(f"node {dst} already has an incoming Next edge")
        cur = dst
        while cur is not None:
            if cur == src:
                raise NextCycle(f"Next edge {src}->{dst} would close a cycle")
            cur = self.next_successor(cur)

    def _check_sub(self, src: int, dst: int):
        # SUB edges form a forest: one parent per entity, no ancestor cycles
        for e in self._adjacency[dst]:
            if e.kind is RelationKind.SUB and e.dst == dst:
                raise KindConstraintViolated(f"entity {dst} already has a SUB parent")
        cur: int | None = src
        while cur is not None:
            if cur == dst:
                raise KindConstraintViolated(f"SUB edge {src}->{dst} would close a cycle")
            cur = next(
                (e.src for e in self._adjacency[cur] if e.kind is RelationKind.SUB and e.dst == cur),
                None,
            )

    def freeze(self) -> "ManualGraph":
        """Make the graph immutable; records a warning per extra component."""
        if not self.frozen:
            self.warnings = self._connectivity_warnings()
            self.frozen = True
        return self

    # -- lookups ------------------------------------------------------

    def _require(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no node {node_id} in graph {self.manual_id!r}") from None

    def node(self, node_id: int) -> Node:
        return self._require(node_id)

    def node_ids(self) -> list[int]:
        return sorted(self.nodes)

    def ids_of_kind(self, kind: NodeKind) -> list[int]:
        return sorted(n.id for n in self.nodes.values() if n.kind is kind)

    def incident_edges(self, node_id: int) -> list[Edge]:
        self._require(node_id)
        return list(self._adjacency[node_id])

    def next_successor(self, node_id: int) -> int | None:
        for e in self._adjacency[node_id]:
            if e.kind is RelationKind.NEXT and e.src == node_id:
                return e.dst
        return None

    def next_predecessor(self, node_id: int) -> int | None:
        for e in self._adjacency[node_id]:
            if e.kind is RelationKind.NEXT and e.dst == node_id:
                return e.src
        return None

    def adjacent_ids(self, node_id: int) -> set[int]:
        """All nodes sharing any edge with node_id, in either direction."""
        self._require(node_id)
        out = set()
        for e in self._adjacency[node_id]:
            out.add(e.src if e.dst == node_id else e.dst)
        return out

    # -- neighbor sets ------------------------------------------------

    def procedural_neighbors(self, node_id: int) -> set[int]:
        """Nodes adjacent via Next (either direction) plus the node itself."""
        self._require(node_id)
        out = {node_id}
        for e in self._adjacency[node_id]:
            if e.kind is RelationKind.NEXT:
                out.add(e.src if e.dst == node_id else e.dst)
        return out

    def factual_neighbors(self, node_id: int) -> set[int]:
        """Nodes adjacent via any non-Next relation plus the node itself."""
        self._require(node_id)
        out = {node_id}
        for e in self._adjacency[node_id]:
            if e.kind is not RelationKind.NEXT:
                out.add(e.src if e.dst == node_id else e.dst)
        return out

    # -- clue text ----------------------------------------------------

    def recompose(self, node_id: int) -> str:
        """Readable clue text: the node plus its agent, patient and arguments,
        ordered by where they appear in the manual."""
        node = self._require(node_id)
        parts = [node]
        for e in self._adjacency[node_id]:
            if e.src == node_id and e.kind in _RECOMPOSE_RELATIONS:
                parts.append(self.nodes[e.dst])
        parts.sort(key=lambda n: (n.span[0], n.span[1], n.id))
        return " ".join(n.surface for n in parts)

    # -- structure checks ----------------------------------------------

    def _connectivity_warnings(self) -> list[str]:
        if not self.nodes:
            return []
        seen: set[int] = set()
        components: list[int] = []  # smallest node id per component
        for start in self.node_ids():
            if start in seen:
                continue
            components.append(start)
            stack = [start]
            seen.add(start)
            while stack:
                cur = stack.pop()
                for other in self.adjacent_ids(cur):
                    if other not in seen:
                        seen.add(other)
                        stack.append(other)
        if len(components) <= 1:
            return []
        return [
            f"graph {self.manual_id!r} is disconnected: component containing node {root}"
            for root in components[1:]
        ]

    # -- serialization ------------------------------------------------

    def to_canonical_dict(self) -> dict:
        nodes = []
        for nid in self.node_ids():
            n = self.nodes[nid]
            item: dict = {
                "id": n.id,
                "kind": n.kind.value,
                "surface": n.surface,
                "span": [n.span[0], n.span[1]],
            }
            if n.role is not None:
                item["role"] = n.role.encode()
            item["mention_spans"] = [[s, e] for s, e in sorted(n.mention_spans)]
            nodes.append(item)
        edges = [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value}
            for e in sorted(self.edges, key=Edge.key)
        ]
        return {"manual_id": self.manual_id, "text": self.text, "nodes": nodes, "edges": edges}

    def to_json(self) -> str:
        """Canonical JSON; byte-stable across round trips."""
        return json.dumps(self.to_canonical_dict(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "ManualGraph":
        g = cls(data["manual_id"], data["text"])
        for item in data["nodes"]:
            role = ArgumentRole.parse(item["role"]) if "role" in item else None
            node = Node(
                id=item["id"],
                kind=NodeKind(item["kind"]),
                surface=item["surface"],
                span=tuple(item["span"]),
                role=role,
                mention_spans=[tuple(s) for s in item.get("mention_spans", [])],
            )
            g._install_node(node)
        for item in data["edges"]:
            g.add_edge(item["src"], item["dst"], RelationKind(item["kind"]))
        return g.freeze()

    @classmethod
    def from_json(cls, raw: str) -> "ManualGraph":
        return cls.from_dict(json.loads(raw))

    def _install_node(self, node: Node):
        """Insert a fully-formed node, preserving its id (deserialization, fusion)."""
        self._guard_mutation()
        if node.id in self.nodes:
            raise ValueError(f"node id {node.id} already present")
        start, end = node.span
        if not (0 <= start <= end <= len(self.text)):
            raise SpanOutOfBounds(f"span [{start},{end}) outside text")
        if (node.role is not None) != (node.kind is NodeKind.ARGUMENT):
            raise RoleMismatch(f"bad role on node {node.id}")
        self.nodes[node.id] = node
        self._adjacency[node.id] = []
        self._next_id = max(self._next_id, node.id + 1)
