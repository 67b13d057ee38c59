"""Graph-anchored auditing of long-form research reports.

Scores a report against an expert-curated research graph along five
dimensions (coverage, logical consistency, QA utility, objectivity, citation
health) plus an overall aggregate, and ships a perturbation harness for
measuring how responsive and consistent the evaluator itself is.
"""

from .errors import (
    AuditError,
    ExamFormatError,
    GraphFormatError,
    JudgeTransportError,
    PerturbationError,
)
from .exam import (
    BiasAuditItem,
    ExamQuestion,
    GradedAnswer,
    QuestionKind,
    grade_answer,
    load_exam,
    run_bias_audit,
    run_exam,
)
from .graph import (
    GraphEdge,
    GraphNode,
    NodeLevel,
    ResearchGraph,
    WeightTable,
    compute_weights,
    load_graph,
    total_weight,
)
from .judge import DeterministicJudge, Judge, PresenceVerdict, RemoteJudge, StanceScores
from .meta import (
    ConsistencyReport,
    Perturbation,
    PerturbationKind,
    ResponsivenessReport,
    consistency_report,
    degrade,
    improve,
    responsiveness,
    scale_judge_deltas,
    sigma_norm,
)
from .metrics import (
    CoverageScores,
    MetricConfig,
    MetricScores,
    coverage,
    logical_consistency,
    narrative_monopolization,
    objectivity,
    overall,
    source_dominance,
    utility,
)
from .projection import (
    ProjectionResult,
    RecoveredSubgraph,
    SupportVerdict,
    project,
    recovered_subgraph,
    verify_support,
)
from .report import (
    CitationDistribution,
    ReferenceEntry,
    Report,
    Section,
    SectionPresence,
    citation_distribution,
    parse_report,
    render_markdown,
    section_presence,
)
from .runner import (
    JudgeSettings,
    RunConfig,
    RunRecord,
    cmd_evaluate,
    cmd_exam,
    cmd_leaderboard,
    cmd_meta,
    cmd_validate,
    evaluate_report,
)

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "BiasAuditItem",
    "CitationDistribution",
    "ConsistencyReport",
    "CoverageScores",
    "DeterministicJudge",
    "ExamFormatError",
    "ExamQuestion",
    "GradedAnswer",
    "GraphEdge",
    "GraphFormatError",
    "GraphNode",
    "Judge",
    "JudgeSettings",
    "JudgeTransportError",
    "MetricConfig",
    "MetricScores",
    "NodeLevel",
    "Perturbation",
    "PerturbationError",
    "PerturbationKind",
    "PresenceVerdict",
    "ProjectionResult",
    "QuestionKind",
    "RecoveredSubgraph",
    "ReferenceEntry",
    "Report",
    "ResearchGraph",
    "ResponsivenessReport",
    "RunConfig",
    "RunRecord",
    "Section",
    "SectionPresence",
    "StanceScores",
    "SupportVerdict",
    "WeightTable",
    "citation_distribution",
    "cmd_evaluate",
    "cmd_exam",
    "cmd_leaderboard",
    "cmd_meta",
    "cmd_validate",
    "compute_weights",
    "consistency_report",
    "coverage",
    "degrade",
    "evaluate_report",
    "grade_answer",
    "improve",
    "load_exam",
    "load_graph",
    "logical_consistency",
    "narrative_monopolization",
    "objectivity",
    "overall",
    "parse_report",
    "project",
    "recovered_subgraph",
    "render_markdown",
    "responsiveness",
    "run_bias_audit",
    "run_exam",
    "scale_judge_deltas",
    "section_presence",
    "sigma_norm",
    "source_dominance",
    "total_weight",
    "utility",
    "verify_support",
]
