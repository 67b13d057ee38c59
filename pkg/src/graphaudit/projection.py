"""Graph projection onto a report and citation-chain verification.

Projection asks the judge, node by node, whether each claim in the graph is
present in the report; the hits form the recovered subgraph. A global
conclusion then counts as *supported* only when some unbroken chain of hit
nodes connects a hit atomic fact up to it, so a report cannot get credit for
stating a conclusion whose evidence trail it never laid down.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .graph import GraphEdge, NodeLevel, ResearchGraph
from .judge import Judge, PresenceVerdict
from .report import Report


@dataclass
class ProjectionResult:
    """One presence verdict per graph node, partitioned by level."""

    graph: ResearchGraph
    verdicts: dict[str, PresenceVerdict]
    hits_by_level: dict[NodeLevel, frozenset[str]] = field(default_factory=dict)
    failed_nodes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.hits_by_level:
            self.hits_by_level = {
                level: frozenset(
                    node_id
                    for node_id, verdict in self.verdicts.items()
                    if verdict.hit and self.graph.nodes[node_id].level == level
                )
                for level in NodeLevel
            }

    @property
    def hit_ids(self) -> frozenset[str]:
        return frozenset(
            node_id for node_id, verdict in self.verdicts.items() if verdict.hit
        )

    @property
    def partial(self) -> bool:
        return bool(self.failed_nodes)


@dataclass(frozen=True)
class RecoveredSubgraph:
    node_ids: frozenset[str]
    edges: tuple[GraphEdge, ...]


@dataclass(frozen=True)
class SupportVerdict:
    global_id: str
    hit: bool
    supported: bool
    witness_path: tuple[str, ...] | None = None


def project(
    graph: ResearchGraph, report: Report, judge: Judge, max_workers: int = 1
) -> ProjectionResult:
    """Assess every graph node against the report.

    Judge transport failures do not abort the run: the affected node gets an
    error verdict (miss, confidence 0) and is listed in ``failed_nodes`` so
    the run can be marked partial.
    """
    from .errors import JudgeTransportError

    node_ids = sorted(graph.nodes)

    def assess(node_id: str) -> tuple[PresenceVerdict, bool]:
        try:
            return judge.assess_presence(graph.nodes[node_id], report), False
        except JudgeTransportError as exc:
            return PresenceVerdict(node_id, False, f"judge error: {exc}", 0.0), True

    if max_workers > 1 and len(node_ids) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(assess, node_ids))
    else:
        outcomes = [assess(node_id) for node_id in node_ids]

    verdicts = {verdict.node_id: verdict for verdict, _ in outcomes}
    failed = tuple(verdict.node_id for verdict, errored in outcomes if errored)
    return ProjectionResult(graph=graph, verdicts=verdicts, failed_nodes=failed)


def recovered_subgraph(graph: ResearchGraph, result: ProjectionResult) -> RecoveredSubgraph:
    """Induced subgraph on the hit set."""
    hits = result.hit_ids
    edges = tuple(
        edge for edge in graph.edges if edge.source in hits and edge.target in hits
    )
    return RecoveredSubgraph(node_ids=hits, edges=edges)


def verify_support(graph: ResearchGraph, result: ProjectionResult) -> list[SupportVerdict]:
    """Check every global conclusion for an unbroken evidence chain.

    A global node is supported iff, inside the recovered subgraph, it is
    reachable from some hit atomic fact following evidence-to-conclusion
    edges. Breadth-first search from all hit atomic facts yields a shortest
    witness path for each supported global.
    """
    hits = result.hit_ids
    forward: dict[str, list[str]] = {node_id: [] for node_id in graph.nodes}
    for edge in graph.edges:
        if edge.source in hits and edge.target in hits:
            forward[edge.source].append(edge.target)
    for neighbors in forward.values():
        neighbors.sort()

    sources = sorted(
        node_id
        for node_id in hits
        if graph.nodes[node_id].level is NodeLevel.ATOMIC_FACT
    )
    parent: dict[str, str | None] = {source: None for source in sources}
    queue = deque(sources)
    while queue:
        current = queue.popleft()
        for neighbor in forward[current]:
            if neighbor not in parent:
                parent[neighbor] = current
                queue.append(neighbor)

    verdicts: list[SupportVerdict] = []
    for global_id in sorted(graph.ids_at(NodeLevel.GLOBAL_INSIGHT)):
        hit = global_id in hits
        supported = global_id in parent
        witness: tuple[str, ...] | None = None
        if supported:
            path = [global_id]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])  # type: ignore[arg-type]
            witness = tuple(reversed(path))
        verdicts.append(
            SupportVerdict(
                global_id=global_id, hit=hit, supported=supported, witness_path=witness
            )
        )
    return verdicts


def projection_to_dict(
    result: ProjectionResult, support: list[SupportVerdict] | None = None
) -> dict:
    """JSON-serializable dump of verdicts and witness paths for the run directory."""
    payload: dict = {
        "verdicts": [
            {
                "node_id": verdict.node_id,
                "level": result.graph.nodes[verdict.node_id].level.value,
                "hit": verdict.hit,
                "confidence": verdict.confidence,
                "rationale": verdict.rationale,
            }
            for _, verdict in sorted(result.verdicts.items())
        ],
        "failed_nodes": list(result.failed_nodes),
    }
    if support is not None:
        payload["support"] = [
            {
                "global_id": verdict.global_id,
                "hit": verdict.hit,
                "supported": verdict.supported,
                "witness_path": list(verdict.witness_path) if verdict.witness_path else None,
            }
            for verdict in support
        ]
    return payload
