"""The metric suite: coverage, consistency, utility, objectivity, citation health.

Every function here is a pure formula over already-computed inputs, so the
same inputs always give bit-identical outputs. Scores live on a 0-100 scale.
Metrics that cannot be computed (no global conclusions, no exam, no
citations) come back as ``None`` rather than a fake zero, and a ``None``
core metric makes the overall aggregate ``None`` instead of silently
renormalizing.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

from .graph import NodeLevel, ResearchGraph, WeightTable
from .judge import StanceScores
from .projection import ProjectionResult, SupportVerdict
from .report import CitationDistribution, SectionPresence


@dataclass(frozen=True)
class MetricConfig:
    """Shared metric constants.

    ``epsilon`` guards the consistency ratio against 0/0; ``lambda_penalty``
    converts stance calibration error into score deductions;
    ``overall_weights`` weight (coverage, consistency, utility, objectivity)
    in the overall aggregate and default to an equal-weight mean.
    """

    epsilon: float = 1e-9
    lambda_penalty: float = 5.0
    overall_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.lambda_penalty <= 0:
            raise ValueError("lambda_penalty must be positive")
        if len(self.overall_weights) != 4 or any(w < 0 for w in self.overall_weights):
            raise ValueError("overall_weights must be four non-negative numbers")
        if abs(sum(self.overall_weights) - 1.0) > 1e-12:
            raise ValueError("overall_weights must sum to 1")


DEFAULT_CONFIG = MetricConfig()


@dataclass(frozen=True)
class CoverageScores:
    atomic_recall: float | None
    key_recall: float | None
    global_recall: float | None
    depth_weighted: float


def coverage(
    graph: ResearchGraph, weights: WeightTable, result: ProjectionResult
) -> CoverageScores:
    """Per-level recall plus depth-weighted recall.

    Depth-weighted recall is the hit nodes' share of the total weight mass,
    times 100, so recovering a deeply derived conclusion outweighs
    restating any one of its leaf facts. Levels with no nodes yield ``None``
    rather than a spurious 0.
    """
    if not graph.nodes:
        raise ValueError("cannot audit an empty graph")
    hits = result.hit_ids

    def level_recall(level: NodeLevel) -> float | None:
        ids = graph.ids_at(level)
        if not ids:
            return None
        return 100.0 * sum(1 for node_id in ids if node_id in hits) / len(ids)

    hit_weight = sum(weights[node_id] for node_id in hits)
    total = sum(weights[node_id] for node_id in graph.nodes)
    return CoverageScores(
        atomic_recall=level_recall(NodeLevel.ATOMIC_FACT),
        key_recall=level_recall(NodeLevel.KEY_INSIGHT),
        global_recall=level_recall(NodeLevel.GLOBAL_INSIGHT),
        depth_weighted=100.0 * hit_weight / total,
    )


def logical_consistency(
    graph: ResearchGraph,
    support: Sequence[SupportVerdict],
    config: MetricConfig = DEFAULT_CONFIG,
) -> float | None:
    """Supported-to-hit ratio times global-hit coverage, times 100.

    The product penalizes reports that state correct conclusions without an
    intact evidence chain. ``None`` when the graph has no global conclusions.
    """
    total = len(graph.ids_at(NodeLevel.GLOBAL_INSIGHT))
    if total == 0:
        return None
    hit = sum(1 for verdict in support if verdict.hit)
    supported = sum(1 for verdict in support if verdict.supported)
    return 100.0 * (supported / (hit + config.epsilon)) * (hit / total)


def utility(graded: Sequence) -> float | None:
    """Fraction of exam questions answered correctly, times 100; ``None`` if none graded."""
    if not graded:
        return None
    return 100.0 * sum(1 for answer in graded if answer.correct) / len(graded)


def objectivity(
    items: Sequence[tuple[StanceScores, tuple[float, float]]],
    config: MetricConfig = DEFAULT_CONFIG,
) -> float | None:
    """Mean stance-calibration score over audit items; ``None`` if there are none.

    Per item the calibration error is the L1 distance between extracted and
    ground-truth support scores; each item scores max(0, 100 - lambda * error)
    and items are averaged after clamping.
    """
    if not items:
        return None
    per_item: list[float] = []
    for scores, ground_truth in items:
        gt_thesis, gt_antithesis = ground_truth
        for value in (gt_thesis, gt_antithesis):
            if not 0.0 <= value <= 10.0:
                raise ValueError(f"ground-truth stance score {value} outside [0, 10]")
        error = abs(scores.thesis - gt_thesis) + abs(scores.antithesis - gt_antithesis)
        per_item.append(max(0.0, 100.0 - config.lambda_penalty * error))
    return sum(per_item) / len(per_item)


def source_dominance(dist: CitationDistribution) -> float | None:
    """Citation-volume concentration: 100 minus the normalized Shannon entropy share.

    0 for a perfectly uniform distribution, 100 when one source takes all
    volume. A single cited source is defined as 100 (the extreme this metric
    exists to flag); no cited sources yields ``None``.
    """
    if dist.unique_sources == 0:
        return None
    if dist.unique_sources == 1:
        return 100.0
    entropy = -sum(p * math.log2(p) for p in dist.proportions.values() if p > 0)
    return 100.0 * (1.0 - entropy / math.log2(dist.unique_sources))


def narrative_monopolization(presence: SectionPresence) -> float | None:
    """Largest fraction of sections any single source is cited in, times 100."""
    if presence.section_total < 1 or not presence.section_counts:
        return None
    return 100.0 * max(presence.section_counts.values()) / presence.section_total


def overall(
    coverage_score: float | None,
    consistency_score: float | None,
    utility_score: float | None,
    objectivity_score: float | None,
    config: MetricConfig = DEFAULT_CONFIG,
) -> float | None:
    """Weighted average of the four core metrics; ``None`` if any is missing."""
    components = (coverage_score, consistency_score, utility_score, objectivity_score)
    if any(value is None for value in components):
        return None
    return sum(w * v for w, v in zip(config.overall_weights, components))


CSV_COLUMNS = [
    "name",
    "overall",
    "coverage",
    "consistency",
    "utility",
    "objectivity",
    "dominance",
    "monopolization",
    "recall_atomic",
    "recall_key",
    "recall_global",
]


@dataclass
class MetricScores:
    """Complete score sheet for one audited report."""

    recall_atomic: float | None = None
    recall_key: float | None = None
    recall_global: float | None = None
    coverage: float | None = None
    consistency: float | None = None
    utility: float | None = None
    objectivity: float | None = None
    dominance: float | None = None
    monopolization: float | None = None
    overall: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "recall_atomic": self.recall_atomic,
            "recall_key": self.recall_key,
            "recall_global": self.recall_global,
            "coverage": self.coverage,
            "consistency": self.consistency,
            "utility": self.utility,
            "objectivity": self.objectivity,
            "dominance": self.dominance,
            "monopolization": self.monopolization,
            "overall": self.overall,
            "diagnostics": list(self.diagnostics),
        }

    def csv_row(self, name: str, null: str = "-") -> list[str]:
        values = self.to_dict()
        row = [name]
        for column in CSV_COLUMNS[1:]:
            value = values[column]
            row.append(null if value is None else f"{value:.2f}")
        return row
