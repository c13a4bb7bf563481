"""Parse structured manual annotations into graphs and fuse coreferent mentions.

The annotation format carries pre-segmented procedures (ordered action
lists) and declared entities; this module turns one document into a frozen
ManualGraph. Identical surfaces of entities and arguments are fused into a
single node afterwards, action nodes are never merged.
"""
from __future__ import annotations

import json
from pathlib import Path

import yaml

from .errors import (
    EmptyProcedure,
    FrozenGraph,
    InvalidAnnotation,
    SpanMismatch,
    UnresolvedReference,
)
from .graph import ArgumentRole, Edge, ManualGraph, Node, NodeKind, RelationKind

DEFAULT_AGENT = "User"


def load_annotation(path: str | Path) -> dict:
    """Read a JSON or YAML annotation file into a plain dict."""
    p = Path(path)
    raw = p.read_text(encoding="utf-8")
    if p.suffix.lower() in (".yaml", ".yml"):
        data = yaml.safe_load(raw)
    else:
        data = json.loads(raw)
    if not isinstance(data, dict):
        raise InvalidAnnotation("annotation root must be a mapping", location=str(p))
    return data


def parse_manual(document: dict) -> ManualGraph:
    """Build, fuse and freeze the graph for one annotated manual."""
    builder = _Builder(document)
    graph = builder.build()
    fuse_coreferences(graph)
    return graph.freeze()


class _Builder:
    def __init__(self, document: dict):
        if "manual_id" not in document or "text" not in document:
            raise InvalidAnnotation("annotation needs 'manual_id' and 'text'", location="$")
        self.doc = document
        self.graph = ManualGraph(str(document["manual_id"]), document["text"])
        self.declared: dict[str, int] = {}  # entity surface -> node id
        self._pending_pata: list[tuple[int, object, str]] = []

    def build(self) -> ManualGraph:
        for i, spec in enumerate(_as_list(self.doc.get("entities", []), "entities")):
            self._entity(spec, f"entities[{i}]")
        self._inject_default_agent()
        for i, proc in enumerate(_as_list(self.doc.get("procedures", []), "procedures")):
            self._procedure(proc, f"procedures[{i}]")
        for arg_id, ref, loc in self._pending_pata:
            target = self._resolve(ref, loc)
            self.graph.add_edge(arg_id, target, RelationKind.PATA)
        return self.graph

    # -- pieces ---------------------------------------------------------

    def _entity(self, spec, loc: str, parent: int | None = None) -> int:
        _expect_mapping(spec, loc)
        surface, span = self._surface_span(spec, loc)
        node = self.graph.add_node(NodeKind.ENTITY, surface, span)
        self.declared.setdefault(surface, node)
        if parent is not None:
            self.graph.add_edge(parent, node, RelationKind.SUB)
        for j, arg in enumerate(_as_list(spec.get("args", []), f"{loc}.args")):
            self._argument(arg, node, RelationKind.ENTITY_ARG, f"{loc}.args[{j}]")
        for j, sub in enumerate(_as_list(spec.get("sub_entities", []), f"{loc}.sub_entities")):
            self._entity(sub, f"{loc}.sub_entities[{j}]", parent=node)
        return node

    def _argument(self, spec, owner: int, relation: RelationKind, loc: str) -> int:
        _expect_mapping(spec, loc)
        surface, span = self._surface_span(spec, loc)
        role = ArgumentRole.parse(str(spec.get("role", "other")))
        node = self.graph.add_node(NodeKind.ARGUMENT, surface, span, role=role)
        self.graph.add_edge(owner, node, relation)
        pata = _as_list(spec.get("pata_targets", []), f"{loc}.pata_targets")
        if pata and role.kind != "state":
            raise InvalidAnnotation("pata_targets allowed only on state arguments", location=loc)
        for k, ref in enumerate(pata):
            self._pending_pata.append((node, ref, f"{loc}.pata_targets[{k}]"))
        for k, nested in enumerate(_as_list(spec.get("arg_args", []), f"{loc}.arg_args")):
            self._argument(nested, node, RelationKind.ARG_ARG, f"{loc}.arg_args[{k}]")
        return node

    def _procedure(self, actions, loc: str):
        actions = _as_list(actions, loc)
        if not actions:
            raise EmptyProcedure(f"{loc} has no actions")
        previous = None
        for j, spec in enumerate(actions):
            node = self._action(spec, f"{loc}[{j}]")
            if previous is not None:
                self.graph.add_edge(previous, node, RelationKind.NEXT)
            previous = node

    def _action(self, spec, loc: str) -> int:
        _expect_mapping(spec, loc)
        surface, span = self._surface_span(spec, loc)
        node = self.graph.add_node(NodeKind.ACTION, surface, span)
        if spec.get("agent") is not None:
            self.graph.add_edge(node, self._resolve(spec["agent"], f"{loc}.agent"), RelationKind.AGT)
        if spec.get("patient") is not None:
            self.graph.add_edge(node, self._resolve(spec["patient"], f"{loc}.patient"), RelationKind.PAT)
        for j, arg in enumerate(_as_list(spec.get("args", []), f"{loc}.args")):
            _expect_mapping(arg, f"{loc}.args[{j}]")
            if arg.get("arg_args"):
                raise InvalidAnnotation(
                    "arg_args is not allowed on action arguments", location=f"{loc}.args[{j}]"
                )
            self._argument(arg, node, RelationKind.ACTION_ARG, f"{loc}.args[{j}]")
        return node

    # -- helpers ----------------------------------------------------------

    def _surface_span(self, spec: dict, loc: str) -> tuple[str, tuple[int, int]]:
        try:
            surface = spec["surface"]
            start, end = spec["span"]
        except (KeyError, TypeError, ValueError):
            raise InvalidAnnotation("expected 'surface' and 'span': [start, end]", location=loc) from None
        if self.graph.text[start:end] != surface:
            raise SpanMismatch(
                f"{loc}: surface {surface!r} != text[{start}:{end}] "
                f"{self.graph.text[start:end]!r}"
            )
        return surface, (start, end)

    def _resolve(self, ref, loc: str) -> int:
        """Entity reference: a bare surface resolves to a declared entity,
        an inline mapping creates an implicit mention node."""
        if isinstance(ref, str):
            if ref in self.declared:
                return self.declared[ref]
            raise UnresolvedReference(f"{loc}: no declared entity {ref!r}")
        _expect_mapping(ref, loc)
        surface, span = self._surface_span(ref, loc)
        node = self.graph.add_node(NodeKind.ENTITY, surface, span)
        self.declared.setdefault(surface, node)
        return node

    def _inject_default_agent(self):
        if DEFAULT_AGENT in self.declared:
            return
        # every manual has a default agent entity; anchor it at the first
        # literal mention, or give it no anchor when the text never names it
        pos = self.graph.text.find(DEFAULT_AGENT)
        span = (pos, pos + len(DEFAULT_AGENT)) if pos >= 0 else (0, 0)
        node = self.graph.add_node(NodeKind.ENTITY, DEFAULT_AGENT, span)
        self.declared[DEFAULT_AGENT] = node


def fuse_coreferences(graph: ManualGraph) -> ManualGraph:
    """Merge same-kind, byte-identical Entity and Argument surfaces in place.

    The node whose span sorts first keeps its id and gains the other
    mention spans; edges are remapped onto it and exact duplicates dropped.
    Action nodes are never merged. Idempotent.
    """
    if graph.frozen:
        raise FrozenGraph(f"cannot fuse frozen graph {graph.manual_id!r}")

    groups: dict[tuple[NodeKind, str], list[Node]] = {}
    for node in graph.nodes.values():
        if node.kind in (NodeKind.ENTITY, NodeKind.ARGUMENT):
            groups.setdefault((node.kind, node.surface), []).append(node)

    remap: dict[int, int] = {}
    for members in groups.values():
        if len(members) < 2:
            continue
        members.sort(key=lambda n: (n.span[0], n.span[1], n.id))
        keeper = members[0]
        spans = set(keeper.mention_spans)
        for dup in members[1:]:
            remap[dup.id] = keeper.id
            spans.update(dup.mention_spans)
        keeper.mention_spans = sorted(spans)

    if not remap:
        return graph

    kept_nodes = [n for n in graph.nodes.values() if n.id not in remap]
    new_edges = []
    seen = set()
    for e in graph.edges:
        src = remap.get(e.src, e.src)
        dst = remap.get(e.dst, e.dst)
        if src == dst:
            continue  # an edge between two merged mentions collapses away
        key = (src, dst, e.kind)
        if key in seen:
            continue
        seen.add(key)
        new_edges.append(Edge(src, dst, e.kind))

    graph.nodes = {}
    graph._adjacency = {}
    graph.edges = []
    graph._edge_keys = set()
    for node in sorted(kept_nodes, key=lambda n: n.id):
        graph._install_node(node)
    for e in new_edges:
        graph.add_edge(e.src, e.dst, e.kind)
    return graph


def _as_list(value, loc: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise InvalidAnnotation("expected a list", location=loc)
    return value


def _expect_mapping(value, loc: str):
    if not isinstance(value, dict):
        raise InvalidAnnotation("expected a mapping", location=loc)
