"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import json
import random

from graphaudit import NodeLevel, ResearchGraph, load_graph

LEVELS = ("atomic_fact", "key_insight", "global_insight")


def graph_doc(nodes, links, **extra) -> str:
    """Serialize (id, level, content[, urls]) node tuples and (source, target) links."""
    node_objs = []
    for node in nodes:
        node_id, level, content = node[0], node[1], node[2]
        urls = list(node[3]) if len(node) > 3 else (["http://src/" + node_id] if level == "atomic_fact" else [])
        node_objs.append({"id": node_id, "level": level, "content": content, "source_urls": urls})
    link_objs = [{"source": source, "target": target, "relation": "supports"} for source, target in links]
    return json.dumps({"nodes": node_objs, "links": link_objs, **extra})


def make_graph(nodes, links) -> ResearchGraph:
    return load_graph(graph_doc(nodes, links))


DIAMOND_NODES = [
    ("f1", "atomic_fact", "Solar capacity doubled between 2019 and 2023"),
    ("f2", "atomic_fact", "Grid storage costs fell forty percent since 2020"),
    ("f3", "atomic_fact", "Transmission permits take seven years on average"),
    ("i1", "key_insight", "Cheap storage now complements rapid solar growth"),
    ("g1", "global_insight", "Deployment pace is limited by permitting rather than technology"),
]
DIAMOND_LINKS = [("f1", "i1"), ("f2", "i1"), ("i1", "g1"), ("f3", "g1")]


def diamond_graph() -> ResearchGraph:
    """The 5-node diamond: weights f1=f2=f3=1, i1=2, g1=3, total 8."""
    return make_graph(DIAMOND_NODES, DIAMOND_LINKS)


def report_embedding(graph: ResearchGraph, node_ids, heading: str = "Findings") -> str:
    """Markdown report whose sentences are exactly the given nodes' contents."""
    lines = [f"## {heading}"]
    for node_id in node_ids:
        lines.append(graph.nodes[node_id].content + ".")
    return "\n".join(lines) + "\n"


def random_dag_doc(rng: random.Random, max_nodes: int = 50) -> str:
    """Random DAG serialized as a graph file; acyclic by index ordering."""
    count = rng.randint(1, max_nodes)
    nodes = []
    for index in range(count):
        level = rng.choice(LEVELS)
        content = " ".join(f"t{index}w{k}" for k in range(4))
        nodes.append((f"n{index}", level, content))
    links = []
    seen = set()
    for target_index in range(1, count):
        for _ in range(rng.randint(0, min(3, target_index))):
            source_index = rng.randrange(target_index)
            pair = (f"n{source_index}", f"n{target_index}")
            if pair not in seen:
                seen.add(pair)
                links.append(pair)
    return graph_doc(nodes, links)


def random_leveled_dag(rng: random.Random, max_facts: int = 5, max_keys: int = 4,
                       max_globals: int = 3) -> ResearchGraph:
    """Random layered DAG with at least one node per level and unique node vocab."""
    facts = [f"f{i}" for i in range(rng.randint(1, max_facts))]
    keys = [f"k{i}" for i in range(rng.randint(1, max_keys))]
    globals_ = [f"g{i}" for i in range(rng.randint(1, max_globals))]
    nodes = []
    for rank, (ids, level) in enumerate(
        [(facts, "atomic_fact"), (keys, "key_insight"), (globals_, "global_insight")]
    ):
        for node_id in ids:
            content = " ".join(f"{node_id}tok{k}" for k in range(5))
            nodes.append((node_id, level, content))
    links = set()
    for key in keys:
        links.add((rng.choice(facts), key))
    for global_id in globals_:
        links.add((rng.choice(keys + facts), global_id))
    for _ in range(rng.randint(0, 4)):
        lower, upper = sorted(rng.sample(range(len(nodes)), 2))
        source, target = nodes[lower][0], nodes[upper][0]
        if source != target:
            links.add((source, target))
    return make_graph(nodes, sorted(links))


def enumerate_all_paths(graph: ResearchGraph, hits: set[str]) -> dict[str, bool]:
    """Brute-force support oracle: enumerate every simple path inside the
    hit-induced subgraph and record, per global node, whether any path from a
    hit atomic fact reaches it."""
    forward: dict[str, list[str]] = {node_id: [] for node_id in graph.nodes}
    for edge in graph.edges:
        if edge.source in hits and edge.target in hits:
            forward[edge.source].append(edge.target)
    globals_ = [n.id for n in graph.nodes.values() if n.level is NodeLevel.GLOBAL_INSIGHT]
    sources = [
        n.id
        for n in graph.nodes.values()
        if n.level is NodeLevel.ATOMIC_FACT and n.id in hits
    ]
    supported = {global_id: False for global_id in globals_}

    def walk(path: list[str]) -> None:
        tip = path[-1]
        if tip in supported:
            supported[tip] = True
        for nxt in forward[tip]:
            if nxt not in path:
                walk(path + [nxt])

    for source in sources:
        walk([source])
    return supported
