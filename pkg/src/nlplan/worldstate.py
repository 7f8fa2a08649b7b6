"""World state generation: graph -> knowledge items -> vector index -> retrieval.

Every node renders as ``<id> is a <class> (<k>=<v>, ...)`` and every edge as
``<source> <relation> <target> (<k>=<v>, ...)``; the parenthesized segment is
omitted when there are no properties. The items can be embedded into an
in-memory vector index and retrieved by cosine similarity against the goal
text, which yields the compact "world state" block inserted into prompts.

Retrieval is an exact scan (no ANN): the graphs here have tens of items, and
an exact scan keeps the ranking reproducible down to tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kgraph import Edge, KnowledgeGraph, Node, PropertyValue

Embedder = Callable[[str], np.ndarray]

UNIT_NORM_TOLERANCE = 1e-6


class EmbeddingFailed(Exception):
    """The embedding backend raised, or produced an unusable vector."""


@dataclass(frozen=True, slots=True)
class KnowledgeItem:
    """One textual fact rendered from a node or an edge.

    ``origin`` is the node id for node items and the (source, relation,
    target) triple for edge items; it always resolves in the graph snapshot
    the item was rendered from.
    """

    text: str
    origin: str | tuple[str, str, str]


@dataclass(frozen=True, slots=True)
class Full:
    """Use every knowledge item (no retrieval)."""


@dataclass(frozen=True, slots=True)
class Retrieved:
    """Use the top-k items retrieved for the goal."""

    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("retrieval k must be >= 1")


WorldStateMode = Full | Retrieved


@dataclass(frozen=True, slots=True)
class WorldState:
    """Ordered knowledge-item texts destined for a prompt."""

    items: tuple[str, ...]
    mode: WorldStateMode

    def as_block(self) -> str:
        return "\n".join(self.items)


def format_property_value(value: PropertyValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return "(" + ", ".join(repr(float(c)) for c in value) + ")"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _properties_segment(properties: dict[str, PropertyValue]) -> str:
    if not properties:
        return ""
    inner = ", ".join(f"{k}={format_property_value(v)}" for k, v in sorted(properties.items()))
    return f" ({inner})"


def render_node(node: Node) -> str:
    return f"{node.id} is a {node.node_class}{_properties_segment(node.properties)}"


def render_edge(edge: Edge) -> str:
    return f"{edge.source} {edge.relation} {edge.target}{_properties_segment(edge.properties)}"


def render_items(graph: KnowledgeGraph) -> list[KnowledgeItem]:
    """One item per node, then one per edge, each group in lexicographic order."""
    items = [KnowledgeItem(render_node(n), n.id) for n in graph.nodes()]
    items.extend(KnowledgeItem(render_edge(e), e.triple) for e in graph.edges())
    return items


@dataclass(slots=True)
class VectorIndex:
    """Exact-scan vector index over knowledge items (multiset semantics).

    Keeps the embedder that built it so queries embed consistently.
    """

    entries: list[tuple[KnowledgeItem, np.ndarray]]
    dimension: int
    embedder: Embedder

    def __len__(self) -> int:
        return len(self.entries)


def build_index(items: Sequence[KnowledgeItem], embedder: Embedder) -> VectorIndex:
    """Embed every item; vectors are L2-normalized. Duplicates are preserved."""
    entries: list[tuple[KnowledgeItem, np.ndarray]] = []
    dimension = 0
    for item in items:
        vec = _embed(embedder, item.text)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise EmbeddingFailed(f"zero embedding for item {item.text!r}")
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            vec = vec / norm
        if dimension == 0:
            dimension = vec.shape[0]
        elif vec.shape[0] != dimension:
            raise EmbeddingFailed(
                f"embedding dimension changed: {vec.shape[0]} != {dimension}"
            )
        entries.append((item, vec))
    return VectorIndex(entries, dimension, embedder)


def retrieve(index: VectorIndex, query_text: str, k: int) -> list[KnowledgeItem]:
    """Top-k items by cosine similarity to the query, descending.

    Ties break lexicographically by item text. Returns fewer than k items
    only when the index itself is smaller than k.
    """
    return [item for item, _score in retrieve_scored(index, query_text, k)]


def retrieve_scored(index: VectorIndex, query_text: str, k: int) -> list[tuple[KnowledgeItem, float]]:
    """Like :func:`retrieve` but keeps the similarity scores."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qvec = _embed(index.embedder, query_text)
    qnorm = float(np.linalg.norm(qvec))
    if qnorm > 0.0:
        qvec = qvec / qnorm
    scored = [(item, float(np.dot(vec, qvec))) for item, vec in index.entries]
    scored.sort(key=lambda pair: (-pair[1], pair[0].text))
    return scored[:k]


def build_world_state(
    graph: KnowledgeGraph,
    goal_text: str,
    mode: WorldStateMode,
    embedder: Embedder,
) -> WorldState:
    """Render the prompt-ready world state for one goal.

    ``Full`` returns every rendered item; ``Retrieved(k)`` embeds the items,
    then keeps the k most similar to the goal's natural-language rendering.
    """
    items = render_items(graph)
    if isinstance(mode, Full):
        return WorldState(tuple(it.text for it in items), mode)
    index = build_index(items, embedder)
    top = retrieve(index, goal_text, mode.k)
    return WorldState(tuple(item.text for item in top), mode)


class WorldStateBuilder:
    """Build world states while caching the vector index per graph revision.

    Re-embedding 19 items per planning round is cheap, but caching keeps the
    index reuse explicit and mirrors how an embedding database is reused
    between queries against an unchanged graph.
    """

    def __init__(self, embedder: Embedder) -> None:
        self.embedder = embedder
        self._cache: dict[int, VectorIndex] = {}

    def build(self, graph: KnowledgeGraph, goal_text: str, mode: WorldStateMode) -> WorldState:
        if isinstance(mode, Full):
            return WorldState(tuple(it.text for it in render_items(graph)), mode)
        index = self._cache.get(graph.revision)
        if index is None:
            index = build_index(render_items(graph), self.embedder)
            self._cache[graph.revision] = index
        top = retrieve(index, goal_text, mode.k)
        return WorldState(tuple(item.text for item in top), mode)


def _embed(embedder: Embedder, text: str) -> np.ndarray:
    try:
        vec = np.asarray(embedder(text), dtype=np.float64)
    except EmbeddingFailed:
        raise
    except Exception as exc:
        raise EmbeddingFailed(f"embedding backend failed for {text!r}: {exc}") from exc
    if vec.ndim != 1 or vec.shape[0] == 0 or not np.all(np.isfinite(vec)):
        raise EmbeddingFailed(f"embedding backend returned an unusable vector for {text!r}")
    return vec
