"""Research graph loading, validation, and depth-weight computation.

A research graph is a DAG of verified claims at three abstraction levels.
Edges point from evidence to the conclusion they support. Each node gets an
integer depth weight: 1 for nodes with no supporters, otherwise one more
than the heaviest supporter. The weights drive depth-weighted recall, so
capturing a deeply derived conclusion counts for more than restating a leaf
fact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import GraphFormatError

WeightTable = dict[str, int]


class NodeLevel(str, Enum):
    ATOMIC_FACT = "atomic_fact"
    KEY_INSIGHT = "key_insight"
    GLOBAL_INSIGHT = "global_insight"


_RELATIONS = ("supports", "inference")


@dataclass(frozen=True)
class GraphNode:
    id: str
    level: NodeLevel
    content: str
    source_urls: tuple[str, ...] = ()


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    relation: str = "supports"


@dataclass
class ResearchGraph:
    """Validated claim DAG. Immutable after construction; safe to share."""

    nodes: dict[str, GraphNode]
    edges: list[GraphEdge]
    warnings: list[str] = field(default_factory=list)
    _supporters: dict[str, frozenset[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        incoming: dict[str, set[str]] = {node_id: set() for node_id in self.nodes}
        for edge in self.edges:
            incoming[edge.target].add(edge.source)
        self._supporters = {
            node_id: frozenset(sources) for node_id, sources in incoming.items()
        }

    def supporters(self, node_id: str) -> frozenset[str]:
        """Ids of all nodes with an edge into ``node_id``."""
        if node_id not in self.nodes:
            raise KeyError(f"unknown node id: {node_id!r}")
        return self._supporters[node_id]

    def ids_at(self, level: NodeLevel) -> list[str]:
        return [node.id for node in self.nodes.values() if node.level == level]

    def __len__(self) -> int:
        return len(self.nodes)


def load_graph(data: bytes | str) -> ResearchGraph:
    """Parse and validate a graph file.

    The file is JSON with ``nodes`` ({id, level, content, source_urls}) and
    ``links`` ({source, target, relation}). Structural violations (duplicate
    ids, dangling endpoints, self-loops, duplicate links, cycles) raise
    :class:`GraphFormatError`; curation oddities (facts without sources,
    insights without supporters) become warnings on the returned graph.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphFormatError(f"graph file is not valid UTF-8: {exc}") from exc
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed graph file: {exc}") from exc
    if not isinstance(payload, dict):
        raise GraphFormatError("graph file must be a JSON object")

    raw_nodes = payload.get("nodes")
    raw_links = payload.get("links", [])
    if not isinstance(raw_nodes, list):
        raise GraphFormatError("graph file must contain a 'nodes' array")
    if not isinstance(raw_links, list):
        raise GraphFormatError("'links' must be an array")

    nodes: dict[str, GraphNode] = {}
    warnings: list[str] = []
    for position, item in enumerate(raw_nodes):
        if not isinstance(item, dict):
            raise GraphFormatError(f"nodes[{position}] is not an object")
        node_id = item.get("id")
        if not isinstance(node_id, str) or not node_id:
            raise GraphFormatError(f"nodes[{position}] has a missing or empty id")
        if node_id in nodes:
            raise GraphFormatError(f"duplicate node id: {node_id!r}")
        try:
            level = NodeLevel(item.get("level"))
        except ValueError:
            raise GraphFormatError(
                f"node {node_id!r} has invalid level {item.get('level')!r}; "
                f"expected one of {[lv.value for lv in NodeLevel]}"
            ) from None
        content = item.get("content", "")
        if not isinstance(content, str):
            raise GraphFormatError(f"node {node_id!r} content must be a string")
        urls = item.get("source_urls", [])
        if not isinstance(urls, list) or not all(isinstance(u, str) for u in urls):
            raise GraphFormatError(f"node {node_id!r} source_urls must be a string array")
        if level is NodeLevel.ATOMIC_FACT and not urls:
            warnings.append(f"atomic fact {node_id!r} has no source URLs")
        nodes[node_id] = GraphNode(node_id, level, content, tuple(urls))

    edges: list[GraphEdge] = []
    seen_pairs: set[tuple[str, str]] = set()
    for position, item in enumerate(raw_links):
        if not isinstance(item, dict):
            raise GraphFormatError(f"links[{position}] is not an object")
        source = item.get("source")
        target = item.get("target")
        for endpoint in (source, target):
            if not isinstance(endpoint, str):
                raise GraphFormatError(f"links[{position}] endpoints must be strings")
            if endpoint not in nodes:
                raise GraphFormatError(
                    f"links[{position}] references unknown node id {endpoint!r}"
                )
        if source == target:
            raise GraphFormatError(f"links[{position}] is a self-loop on {source!r}")
        relation = item.get("relation", "supports")
        if relation not in _RELATIONS:
            raise GraphFormatError(
                f"links[{position}] has invalid relation {relation!r}; "
                f"expected one of {list(_RELATIONS)}"
            )
        pair = (source, target)
        if pair in seen_pairs:
            raise GraphFormatError(f"duplicate link {source!r} -> {target!r}")
        seen_pairs.add(pair)
        edges.append(GraphEdge(source, target, relation))

    cycle = _find_cycle(nodes, edges)
    if cycle is not None:
        listing = " -> ".join(cycle + (cycle[0],))
        raise GraphFormatError(f"cycle detected: {listing}", cycle=cycle)

    graph = ResearchGraph(nodes=nodes, edges=edges, warnings=warnings)
    for node in graph.nodes.values():
        if node.level is not NodeLevel.ATOMIC_FACT and not graph.supporters(node.id):
            graph.warnings.append(
                f"{node.level.value} node {node.id!r} has no supporters; treated as weight-1 leaf"
            )
    return graph


def _find_cycle(
    nodes: dict[str, GraphNode], edges: list[GraphEdge]
) -> tuple[str, ...] | None:
    """Return the node ids of one directed cycle, or None when acyclic."""
    outgoing: dict[str, list[str]] = {node_id: [] for node_id in nodes}
    for edge in edges:
        outgoing[edge.source].append(edge.target)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {node_id: WHITE for node_id in nodes}
    for start in nodes:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path: list[str] = []
        while stack:
            node_id, next_child = stack[-1]
            if next_child == 0:
                color[node_id] = GRAY
                path.append(node_id)
            children = outgoing[node_id]
            if next_child < len(children):
                stack[-1] = (node_id, next_child + 1)
                child = children[next_child]
                if color[child] == GRAY:
                    cycle_start = path.index(child)
                    return tuple(path[cycle_start:])
                if color[child] == WHITE:
                    stack.append((child, 0))
            else:
                color[node_id] = BLACK
                stack.pop()
                path.pop()
    return None


def compute_weights(graph: ResearchGraph) -> WeightTable:
    """Depth weight of every node: 1 for supporter-less nodes, else 1 + max supporter weight.

    Evaluated in topological order, so the result is independent of node
    iteration order.
    """
    pending: dict[str, int] = {}
    outgoing: dict[str, list[str]] = {node_id: [] for node_id in graph.nodes}
    for node_id in graph.nodes:
        pending[node_id] = len(graph.supporters(node_id))
        for source in graph.supporters(node_id):
            outgoing[source].append(node_id)

    weights: WeightTable = {}
    frontier = sorted(node_id for node_id, count in pending.items() if count == 0)
    while frontier:
        node_id = frontier.pop()
        supporter_weights = [weights[s] for s in graph.supporters(node_id)]
        weights[node_id] = 1 + max(supporter_weights) if supporter_weights else 1
        for dependent in outgoing[node_id]:
            pending[dependent] -= 1
            if pending[dependent] == 0:
                frontier.append(dependent)
    if len(weights) != len(graph.nodes):
        # Unreachable for graphs built by load_graph, which rejects cycles.
        missing = sorted(set(graph.nodes) - set(weights))
        raise GraphFormatError(f"cycle detected among: {missing}")
    return weights


def total_weight(graph: ResearchGraph, weights: WeightTable) -> int:
    """Sum of depth weights over every node in the graph."""
    return sum(weights[node_id] for node_id in graph.nodes)
