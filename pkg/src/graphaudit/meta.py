"""Evaluator sensitivity and consistency analyses.

Perturbations are deterministic, graph-guided text edits: degradation
removes the sentence that best matches a hit node, improvement injects a
missed node's content into the most topically related section. Because the
edits are anchored to graph nodes, the correct direction of the score change
is known by construction, which makes responsiveness measurable without any
generative rewriting. Cross-evaluator consistency is summarized as the
range-normalized standard deviation of scores.
"""

from __future__ import annotations

import random
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import PerturbationError
from .graph import NodeLevel, ResearchGraph
from .projection import ProjectionResult
from .report import Report, Section, extract_marks
from .text import best_sentence_recall, token_set


class PerturbationKind(str, Enum):
    DEGRADE = "degrade"
    IMPROVE = "improve"


@dataclass(frozen=True)
class EditRecord:
    action: str  # "remove" | "insert"
    node_id: str
    section_ordinal: int
    sentence: str
    sentence_index: int | None = None


@dataclass(frozen=True)
class Perturbation:
    kind: PerturbationKind
    target_ids: tuple[str, ...]
    edits: tuple[EditRecord, ...]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "target_ids": list(self.target_ids),
            "edits": [
                {
                    "action": edit.action,
                    "node_id": edit.node_id,
                    "section_ordinal": edit.section_ordinal,
                    "sentence": edit.sentence,
                    "sentence_index": edit.sentence_index,
                }
                for edit in self.edits
            ],
        }


_DEGRADE_LEVELS = (NodeLevel.ATOMIC_FACT, NodeLevel.KEY_INSIGHT)


def _check_count(count: int, targets: Sequence[str] | None) -> None:
    effective = len(targets) if targets is not None else count
    if not 1 <= effective <= 3:
        raise PerturbationError(f"perturbation size must be 1-3, got {effective}")


def _rebuild(report: Report, sentences_per_section: list[list[str]]) -> Report:
    """New report with replaced sentence lists; marks and diagnostics recomputed."""
    ref_indices = {ref.index for ref in report.references}
    sections: list[Section] = []
    unresolved: Counter[int] = Counter()
    for section, sentences in zip(report.sections, sentences_per_section):
        marks: Counter[int] = Counter()
        for sentence in sentences:
            for mark in extract_marks(sentence):
                if mark in ref_indices:
                    marks[mark] += 1
                else:
                    unresolved[mark] += 1
        sections.append(
            Section(section.ordinal, section.heading, section.depth, sentences, marks)
        )
    diagnostics = [
        note for note in report.diagnostics if not note.startswith("unresolved citation mark")
    ]
    for mark in sorted(unresolved):
        diagnostics.append(
            f"unresolved citation mark [{mark}] ({unresolved[mark]} occurrence(s))"
        )
    return Report(
        title=report.title,
        sections=sections,
        references=list(report.references),
        diagnostics=diagnostics,
        unresolved_marks=unresolved,
    )


def degrade(
    report: Report,
    graph: ResearchGraph,
    projection: ProjectionResult,
    count: int = 1,
    seed: int = 0,
    *,
    levels: tuple[NodeLevel, ...] = _DEGRADE_LEVELS,
    targets: Sequence[str] | None = None,
) -> tuple[Report, Perturbation]:
    """Remove the best-matching sentence of 1-3 hit nodes.

    Targets are sampled uniformly (seeded) from hit nodes at the allowed
    levels unless given explicitly. Each target's witness sentence is the one
    maximizing deterministic token recall of the node content, exactly the
    overlap that produced the hit; everything else is left untouched.
    """
    _check_count(count, targets)
    candidates = sorted(
        node_id
        for node_id, verdict in projection.verdicts.items()
        if verdict.hit and graph.nodes[node_id].level in levels
    )
    if targets is None:
        if len(candidates) < count:
            raise PerturbationError(
                f"need {count} hit nodes at levels {[lv.value for lv in levels]}, "
                f"found {len(candidates)}"
            )
        chosen = random.Random(seed).sample(candidates, count)
    else:
        missing = [node_id for node_id in targets if node_id not in candidates]
        if missing:
            raise PerturbationError(f"degrade targets must be hit nodes: {missing}")
        chosen = list(targets)

    flat = report.sentence_tokens()
    if not flat:
        raise PerturbationError("report has no sentences to remove")
    removals: dict[tuple[int, int], str] = {}
    edits: list[EditRecord] = []
    for node_id in chosen:
        _, index = best_sentence_recall(token_set(graph.nodes[node_id].content),
                                        [tokens for _, _, tokens in flat])
        section_index, sentence_index, _ = flat[index if index is not None else 0]
        sentence = report.sections[section_index].sentences[sentence_index]
        removals[(section_index, sentence_index)] = sentence
        edits.append(
            EditRecord(
                action="remove",
                node_id=node_id,
                section_ordinal=report.sections[section_index].ordinal,
                sentence=sentence,
                sentence_index=sentence_index,
            )
        )

    new_sentences = [
        [
            sentence
            for sentence_index, sentence in enumerate(section.sentences)
            if (section_index, sentence_index) not in removals
        ]
        for section_index, section in enumerate(report.sections)
    ]
    perturbed = _rebuild(report, new_sentences)
    return perturbed, Perturbation(PerturbationKind.DEGRADE, tuple(chosen), tuple(edits))


def improve(
    report: Report,
    graph: ResearchGraph,
    projection: ProjectionResult,
    count: int = 1,
    seed: int = 0,
    *,
    targets: Sequence[str] | None = None,
) -> tuple[Report, Perturbation]:
    """Inject 1-3 missed nodes' contents as new sentences.

    Each injected sentence is appended to the content section whose heading
    shares the most tokens with the node content; ties resolve to the last
    content section. The sentence is the node content verbatim, with a
    terminal period added when absent so it survives re-parsing as one
    sentence.
    """
    _check_count(count, targets)
    candidates = sorted(
        node_id for node_id, verdict in projection.verdicts.items() if not verdict.hit
    )
    if targets is None:
        if len(candidates) < count:
            raise PerturbationError(
                f"need {count} missed nodes, found {len(candidates)}"
            )
        chosen = random.Random(seed).sample(candidates, count)
    else:
        missing = [node_id for node_id in targets if node_id not in candidates]
        if missing:
            raise PerturbationError(f"improve targets must be missed nodes: {missing}")
        chosen = list(targets)

    sections = report.sections
    if not sections:
        sections = [Section(1, "", 0, [], Counter())]
        report = Report(
            title=report.title,
            sections=sections,
            references=list(report.references),
            diagnostics=list(report.diagnostics),
            unresolved_marks=Counter(report.unresolved_marks),
        )

    new_sentences = [list(section.sentences) for section in report.sections]
    edits: list[EditRecord] = []
    for node_id in chosen:
        content_tokens = token_set(graph.nodes[node_id].content)
        best_overlap = -1
        best_section = 0
        for section_index, section in enumerate(report.sections):
            overlap = len(content_tokens & token_set(section.heading))
            if overlap >= best_overlap:
                best_overlap = overlap
                best_section = section_index
        sentence = graph.nodes[node_id].content.strip()
        if not sentence.endswith((".", "!", "?")):
            sentence += "."
        new_sentences[best_section].append(sentence)
        edits.append(
            EditRecord(
                action="insert",
                node_id=node_id,
                section_ordinal=report.sections[best_section].ordinal,
                sentence=sentence,
            )
        )
    perturbed = _rebuild(report, new_sentences)
    return perturbed, Perturbation(PerturbationKind.IMPROVE, tuple(chosen), tuple(edits))


@dataclass(frozen=True)
class ResponsivenessReport:
    """Directional-correctness rates for degrade and improve perturbations."""

    degrade_rate: float | None
    improve_rate: float | None
    degrade_deltas: tuple[float, ...]
    improve_deltas: tuple[float, ...]
    threshold: float

    def to_dict(self) -> dict:
        return {
            "degrade_rate": self.degrade_rate,
            "improve_rate": self.improve_rate,
            "degrade_deltas": list(self.degrade_deltas),
            "improve_deltas": list(self.improve_deltas),
            "threshold": self.threshold,
        }


def responsiveness(
    triples: Sequence[tuple[float, float | None, float | None]],
    threshold: float = 0.0,
) -> ResponsivenessReport:
    """Rates of correctly directed score shifts over (original, degraded, improved) triples.

    A degradation counts when original - degraded strictly exceeds the
    threshold; an improvement when improved - original does. A zero delta is
    non-responsive. Missing sides (``None``) are excluded from their rate's
    denominator; a side with no data reports ``None``.
    """
    if not triples:
        raise ValueError("responsiveness needs at least one score triple")
    degrade_deltas = [
        original - degraded for original, degraded, _ in triples if degraded is not None
    ]
    improve_deltas = [
        improved - original for original, _, improved in triples if improved is not None
    ]

    def rate(deltas: list[float]) -> float | None:
        if not deltas:
            return None
        return 100.0 * sum(1 for delta in deltas if delta > threshold) / len(deltas)

    return ResponsivenessReport(
        degrade_rate=rate(degrade_deltas),
        improve_rate=rate(improve_deltas),
        degrade_deltas=tuple(degrade_deltas),
        improve_deltas=tuple(improve_deltas),
        threshold=threshold,
    )


def sigma_norm(
    scores: Sequence[Sequence[float]], scale_min: float, scale_max: float
) -> float:
    """Range-normalized cross-evaluator deviation, as a percentage.

    ``scores`` is a report-by-evaluator matrix. Per report: population
    standard deviation across evaluators divided by the scale range. The
    result is the mean over reports, times 100.
    """
    if scale_max <= scale_min:
        raise ValueError("scale_max must exceed scale_min")
    matrix = np.asarray(scores, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 2:
        raise ValueError("need at least one report row and two evaluator columns")
    per_report = matrix.std(axis=1) / (scale_max - scale_min)
    return float(per_report.mean() * 100.0)


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-metric range-normalized deviation across evaluators."""

    sigma_norm: dict[str, float]
    evaluators: tuple[str, ...]
    scale_range: tuple[float, float]
    judge_delta_scale: float = 10.0

    def to_dict(self) -> dict:
        return {
            "sigma_norm": dict(sorted(self.sigma_norm.items())),
            "evaluators": list(self.evaluators),
            "scale_range": list(self.scale_range),
            "judge_delta_scale": self.judge_delta_scale,
        }


def consistency_report(
    metric_matrices: Mapping[str, Sequence[Sequence[float]]],
    evaluators: Sequence[str],
    scale_min: float = 0.0,
    scale_max: float = 100.0,
    judge_delta_scale: float = 10.0,
) -> ConsistencyReport:
    """Compute sigma_norm for each metric's report-by-evaluator matrix."""
    sigmas = {
        metric: sigma_norm(matrix, scale_min, scale_max)
        for metric, matrix in metric_matrices.items()
    }
    return ConsistencyReport(
        sigma_norm=sigmas,
        evaluators=tuple(evaluators),
        scale_range=(scale_min, scale_max),
        judge_delta_scale=judge_delta_scale,
    )


def scale_judge_deltas(deltas: Sequence[float], alpha: float = 10.0) -> list[float]:
    """Scale narrow-range judge score deltas for side-by-side delta comparisons."""
    return [delta * alpha for delta in deltas]
