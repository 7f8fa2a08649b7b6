"""In-memory typed property graph holding the robot's world knowledge.

Nodes are typed entities (robot, person, room, ...) with a property map;
edges are directed (source, relation, target) triples, also with properties.
The graph keeps a revision counter that increases on every mutation, so
downstream consumers (world-state rendering, retrieval caches) can detect
staleness cheaply. Iteration order is deterministic everywhere: nodes sort
by id, edges by (source, relation, target).

Property values are a small tagged union: strings, booleans, finite
numbers, or finite 2D/3D coordinates (meters), e.g. waypoint positions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

PropertyValue = Any  # str | bool | int | float | tuple of 2-3 floats

JSON_SCHEMA_HINT = (
    '{"nodes":[{"id","class","properties"}],'
    '"edges":[{"source","relation","target","properties"}]}'
)


class GraphError(Exception):
    """Base class for knowledge-graph failures."""


class DuplicateId(GraphError):
    """A node with this id already exists."""


class DuplicateEdge(GraphError):
    """This (source, relation, target) triple already exists."""


class DanglingEndpoint(GraphError):
    """An edge references a node id that is not in the graph."""


class NotFound(GraphError):
    """The referenced node or edge does not exist."""


class InvalidProperty(GraphError):
    """A property value is outside the supported tagged union."""


def _validate_property(key: str, value: PropertyValue) -> PropertyValue:
    """Check one property value against the allowed union; normalize coordinates."""
    if isinstance(value, bool) or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise InvalidProperty(f"property {key!r}: number must be finite, got {value!r}")
        return value
    if isinstance(value, (tuple, list)) and len(value) in (2, 3):
        coord = tuple(float(c) for c in value)
        if not all(math.isfinite(c) for c in coord):
            raise InvalidProperty(f"property {key!r}: coordinate must be finite, got {value!r}")
        return coord
    raise InvalidProperty(
        f"property {key!r}: expected string, boolean, finite number or 2D/3D "
        f"coordinate, got {type(value).__name__}"
    )


def _validate_properties(properties: dict[str, PropertyValue] | None) -> dict[str, PropertyValue]:
    props = dict(properties or {})
    return {k: _validate_property(k, v) for k, v in props.items()}


@dataclass(frozen=True, slots=True)
class Node:
    """A typed entity, e.g. Node("rb1", "robot")."""

    id: str
    node_class: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise GraphError("node id must be non-empty")
        if not self.node_class:
            raise GraphError(f"node {self.id!r}: class must be non-empty")
        object.__setattr__(self, "properties", _validate_properties(self.properties))


@dataclass(frozen=True, slots=True)
class Edge:
    """A directed relation between two existing nodes, e.g. rb1 -at-> entrance."""

    source: str
    relation: str
    target: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.source or not self.relation or not self.target:
            raise GraphError("edge source, relation and target must be non-empty")
        object.__setattr__(self, "properties", _validate_properties(self.properties))

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.source, self.relation, self.target)


class KnowledgeGraph:
    """Mutable typed property graph with referential integrity and a revision counter.

    Mutations (add/remove of nodes or edges) increment ``revision``; reads never
    do. ``snapshot()`` returns an independent copy that later mutations of this
    graph cannot affect, suitable for sharing across threads.
    """

    def __init__(self) -> None:
        self._nodes: dict[str, Node] = {}
        self._edges: dict[tuple[str, str, str], Edge] = {}
        self.revision: int = 0

    # -- introspection ------------------------------------------------------

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NotFound(f"no node with id {node_id!r}") from None

    def nodes(self) -> Iterator[Node]:
        """All nodes, sorted by id."""
        for node_id in sorted(self._nodes):
            yield self._nodes[node_id]

    def edges(self) -> Iterator[Edge]:
        """All edges, sorted by (source, relation, target)."""
        for triple in sorted(self._edges):
            yield self._edges[triple]

    def has_edge(self, source: str, relation: str, target: str) -> bool:
        return (source, relation, target) in self._edges

    # -- mutations ----------------------------------------------------------

    def add_node(self, node: Node) -> None:
        if node.id in self._nodes:
            raise DuplicateId(f"node id {node.id!r} already present")
        self._nodes[node.id] = node
        self.revision += 1

    def add_edge(self, edge: Edge) -> None:
        for endpoint in (edge.source, edge.target):
            if endpoint not in self._nodes:
                raise DanglingEndpoint(
                    f"edge {edge.triple} references missing node {endpoint!r}"
                )
        if edge.triple in self._edges:
            raise DuplicateEdge(f"edge {edge.triple} already present")
        self._edges[edge.triple] = edge
        self.revision += 1

    def remove_edge(self, source: str, relation: str, target: str) -> None:
        triple = (source, relation, target)
        if triple not in self._edges:
            raise NotFound(f"no edge {triple}")
        del self._edges[triple]
        self.revision += 1

    def remove_node(self, node_id: str) -> None:
        """Remove a node and every edge touching it."""
        if node_id not in self._nodes:
            raise NotFound(f"no node with id {node_id!r}")
        for triple in [t for t in self._edges if node_id in (t[0], t[2])]:
            del self._edges[triple]
        del self._nodes[node_id]
        self.revision += 1

    # -- queries ------------------------------------------------------------

    def match(
        self,
        source: str | None = None,
        relation: str | None = None,
        target: str | None = None,
    ) -> list[Edge]:
        """Edges matching the concrete parts of a (source?, relation?, target?) pattern.

        ``None`` is a wildcard. Results are sorted lexicographically by
        (source, relation, target); no match is an empty list, not an error.
        """
        out = [
            self._edges[t]
            for t in sorted(self._edges)
            if (source is None or t[0] == source)
            and (relation is None or t[1] == relation)
            and (target is None or t[2] == target)
        ]
        return out

    def snapshot(self) -> "KnowledgeGraph":
        """Independent copy of this graph at the current revision."""
        copy = KnowledgeGraph()
        copy._nodes = dict(self._nodes)
        copy._edges = dict(self._edges)
        copy.revision = self.revision
        return copy

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [
                {"id": n.id, "class": n.node_class, "properties": _props_to_json(n.properties)}
                for n in self.nodes()
            ],
            "edges": [
                {
                    "source": e.source,
                    "relation": e.relation,
                    "target": e.target,
                    "properties": _props_to_json(e.properties),
                }
                for e in self.edges()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KnowledgeGraph":
        if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
            raise GraphError(f"graph document must look like {JSON_SCHEMA_HINT}")
        graph = cls()
        for nd in data["nodes"]:
            graph.add_node(
                Node(nd["id"], nd["class"], _props_from_json(nd.get("properties", {})))
            )
        for ed in data["edges"]:
            graph.add_edge(
                Edge(
                    ed["source"],
                    ed["relation"],
                    ed["target"],
                    _props_from_json(ed.get("properties", {})),
                )
            )
        return graph

    @classmethod
    def from_json(cls, text: str) -> "KnowledgeGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"invalid graph JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_text(self) -> str:
        """Line-oriented export: one tab-separated record per node/edge."""
        lines = []
        for n in self.nodes():
            lines.append(
                "\t".join(["node", n.id, n.node_class, json.dumps(_props_to_json(n.properties))])
            )
        for e in self.edges():
            lines.append(
                "\t".join(
                    ["edge", e.source, e.relation, e.target, json.dumps(_props_to_json(e.properties))]
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "KnowledgeGraph":
        graph = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            kind = fields[0]
            try:
                if kind == "node" and len(fields) == 4:
                    graph.add_node(Node(fields[1], fields[2], _props_from_json(json.loads(fields[3]))))
                elif kind == "edge" and len(fields) == 5:
                    graph.add_edge(
                        Edge(fields[1], fields[2], fields[3], _props_from_json(json.loads(fields[4])))
                    )
                else:
                    raise GraphError(f"line {lineno}: unrecognized record {raw!r}")
            except json.JSONDecodeError as exc:
                raise GraphError(f"line {lineno}: bad properties JSON: {exc}") from exc
        return graph


def _props_to_json(props: dict[str, PropertyValue]) -> dict[str, Any]:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(props.items())}


def _props_from_json(props: dict[str, Any]) -> dict[str, PropertyValue]:
    out: dict[str, PropertyValue] = {}
    for k, v in props.items():
        out[k] = tuple(v) if isinstance(v, list) else v
    return out


def load_graph_file(path: str) -> KnowledgeGraph:
    """Load a graph from a JSON or line-oriented text file (auto-detected)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return KnowledgeGraph.from_json(text)
    return KnowledgeGraph.from_text(text)


def build_graph(nodes: Iterable[Node], edges: Iterable[Edge]) -> KnowledgeGraph:
    """Convenience constructor used by fixtures and demos."""
    graph = KnowledgeGraph()
    for node in nodes:
        graph.add_node(node)
    for edge in edges:
        graph.add_edge(edge)
    return graph
