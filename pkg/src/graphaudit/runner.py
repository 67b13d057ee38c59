"""Batch orchestration: configuration, evaluation runs, persistence, leaderboards.

A run evaluates one or more reports against a graph (plus an optional exam
suite) and persists every artifact under ``<out>/<run-id>/``:

    config.json   deterministic snapshot of the effective configuration
    scores.json   all scores and diagnostics (byte-identical across reruns
                  of the same inputs with the deterministic judge)
    scores.csv    one row per report
    projection/   per-report verdicts and witness paths
    exam/         per-report graded answers and stance audits
    meta/         perturbed reports, edit logs, responsiveness, consistency
    judge-log/    remote judge request/response pairs

Each report is evaluated with its own judge instance so diagnostics stay
ordered and failures stay isolated.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import metrics as metric_ops
from .errors import PerturbationError
from .exam import BiasAuditItem, ExamQuestion, load_exam, run_bias_audit, run_exam
from .graph import ResearchGraph, WeightTable, compute_weights, load_graph
from .judge import DeterministicJudge, Judge, RemoteJudge
from .meta import (
    ConsistencyReport,
    ResponsivenessReport,
    consistency_report,
    degrade,
    improve,
    responsiveness,
)
from .metrics import CSV_COLUMNS, MetricConfig, MetricScores
from .projection import project, projection_to_dict, verify_support
from .report import (
    Report,
    citation_distribution,
    parse_report,
    render_markdown,
    section_presence,
)

LEADERBOARD_COLUMNS = [
    "name",
    "overall",
    "coverage",
    "consistency",
    "utility",
    "objectivity",
    "dominance",
    "monopolization",
]


@dataclass(frozen=True)
class JudgeSettings:
    kind: str = "deterministic"  # deterministic | remote
    tau: float = 0.6
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout: float = 30.0
    max_parallel: int = 4
    api_key_env: str = "GRAPHAUDIT_API_KEY"

    def build(self, log_dir: Path | None = None) -> Judge:
        if self.kind == "deterministic":
            return DeterministicJudge(tau=self.tau)
        if self.kind == "remote":
            if not self.endpoint or not self.model:
                raise ValueError("remote judge needs --endpoint and --model")
            return RemoteJudge(
                self.endpoint,
                self.model,
                temperature=self.temperature,
                timeout=self.timeout,
                max_parallel=self.max_parallel,
                api_key_env=self.api_key_env,
                log_dir=log_dir,
            )
        raise ValueError(f"unknown judge kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "tau": self.tau,
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "timeout": self.timeout,
            "max_parallel": self.max_parallel,
            "api_key_env": self.api_key_env,
        }


@dataclass
class RunConfig:
    graph_path: Path
    report_paths: tuple[Path, ...]
    exam_path: Path | None = None
    judge: JudgeSettings = field(default_factory=JudgeSettings)
    metrics: MetricConfig = field(default_factory=MetricConfig)
    out_dir: Path = Path("runs")
    formats: tuple[str, ...] = ("json", "csv", "markdown")
    section_depth: int | None = None
    perturb_kinds: tuple[str, ...] = ("degrade", "improve")
    perturb_count: int = 1
    seed: int = 0
    taus: tuple[float, ...] = ()
    workers: int = 1

    def snapshot(self) -> dict:
        return {
            "graph": str(self.graph_path),
            "reports": [str(path) for path in self.report_paths],
            "exam": str(self.exam_path) if self.exam_path else None,
            "judge": self.judge.to_dict(),
            "metric_config": {
                "epsilon": self.metrics.epsilon,
                "lambda_penalty": self.metrics.lambda_penalty,
                "overall_weights": list(self.metrics.overall_weights),
            },
            "formats": list(self.formats),
            "section_depth": self.section_depth,
            "perturb_kinds": list(self.perturb_kinds),
            "perturb_count": self.perturb_count,
            "seed": self.seed,
            "taus": list(self.taus),
            "workers": self.workers,
        }


@dataclass
class ReportResult:
    name: str
    scores: MetricScores
    error: str | None = None


@dataclass
class RunRecord:
    run_id: str
    run_dir: Path
    config_snapshot: dict
    graph_warnings: list[str]
    results: list[ReportResult]
    partial: bool = False


def discover_reports(paths: tuple[Path, ...]) -> list[tuple[str, Path]]:
    """Expand report files and directories into unique (name, path) pairs."""
    found: list[Path] = []
    for path in paths:
        path = Path(path)
        if path.is_dir():
            found.extend(sorted(path.glob("*.md")))
        elif path.exists():
            found.append(path)
        else:
            raise FileNotFoundError(f"report path does not exist: {path}")
    named: list[tuple[str, Path]] = []
    used: set[str] = set()
    for path in found:
        name = path.stem
        candidate, suffix = name, 2
        while candidate in used:
            candidate = f"{name}-{suffix}"
            suffix += 1
        used.add(candidate)
        named.append((candidate, path))
    return named


def evaluate_report(
    report: Report,
    graph: ResearchGraph,
    weights: WeightTable,
    judge: Judge,
    config: MetricConfig = metric_ops.DEFAULT_CONFIG,
    questions: list[ExamQuestion] | None = None,
    audits: list[BiasAuditItem] | None = None,
    projection_workers: int = 1,
) -> tuple[MetricScores, dict]:
    """Project, examine, audit, and score one parsed report.

    Returns the score sheet plus a dict of JSON-ready artifacts (projection
    dump, exam dump) for persistence.
    """
    diagnostics: list[str] = list(report.diagnostics)

    result = project(graph, report, judge, max_workers=projection_workers)
    support = verify_support(graph, result)
    if result.partial:
        diagnostics.append(
            "partial projection; judge failed on nodes: " + ", ".join(result.failed_nodes)
        )

    cov = metric_ops.coverage(graph, weights, result)
    consistency = metric_ops.logical_consistency(graph, support, config)
    if consistency is None:
        diagnostics.append("graph has no global conclusions; consistency is null")

    exam_dump: dict = {}
    if questions:
        outcome = run_exam(questions, report, judge)
        diagnostics.extend(outcome.skipped)
        utility = metric_ops.utility(outcome.graded)
        exam_dump["quiz"] = [
            {
                "question": answer.question.question,
                "kind": answer.question.kind.value,
                "depth_metric": answer.question.depth_metric,
                "produced": answer.produced,
                "correct": answer.correct,
                "rationale": answer.rationale,
            }
            for answer in outcome.graded
        ]
    else:
        utility = None
    if utility is None:
        diagnostics.append("no exam questions graded; utility is null")

    if audits:
        audit_outcome = run_bias_audit(audits, report, judge)
        diagnostics.extend(audit_outcome.skipped)
        objectivity = metric_ops.objectivity(audit_outcome.scored, config)
        exam_dump["bias_audits"] = [
            {
                "thesis_score": scores.thesis,
                "antithesis_score": scores.antithesis,
                "gt_scores": list(ground_truth),
            }
            for scores, ground_truth in audit_outcome.scored
        ]
    else:
        objectivity = None
    if objectivity is None:
        diagnostics.append("no bias audits scored; objectivity is null")

    dist = citation_distribution(report)
    dominance = metric_ops.source_dominance(dist)
    if dominance is None:
        diagnostics.append("no resolved citations; dominance is null")
    presence = section_presence(report)
    monopolization = metric_ops.narrative_monopolization(presence)
    if monopolization is None:
        diagnostics.append("no cited sections; monopolization is null")

    overall = metric_ops.overall(cov.depth_weighted, consistency, utility, objectivity, config)
    if overall is None:
        diagnostics.append("a core metric is null; overall is null")

    diagnostics.extend(judge.drain_diagnostics())
    scores = MetricScores(
        recall_atomic=cov.atomic_recall,
        recall_key=cov.key_recall,
        recall_global=cov.global_recall,
        coverage=cov.depth_weighted,
        consistency=consistency,
        utility=utility,
        objectivity=objectivity,
        dominance=dominance,
        monopolization=monopolization,
        overall=overall,
        diagnostics=diagnostics,
    )
    artifacts = {
        "projection": projection_to_dict(result, support),
        "exam": exam_dump,
        "partial": result.partial,
    }
    return scores, artifacts


def _run_id(config: RunConfig, *payloads: bytes) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(config.snapshot(), sort_keys=True).encode("utf-8"))
    for payload in payloads:
        digest.update(payload)
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    return f"{stamp}-{digest.hexdigest()[:8]}"


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _scores_payload(config: RunConfig, record: RunRecord) -> dict:
    return {
        "schema_version": 1,
        "config": config.snapshot(),
        "graph_warnings": list(record.graph_warnings),
        "partial": record.partial,
        "reports": [
            {
                "name": result.name,
                "error": result.error,
                "scores": result.scores.to_dict(),
            }
            for result in sorted(record.results, key=lambda r: r.name)
        ],
    }


def _scores_csv(record: RunRecord) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for result in sorted(record.results, key=lambda r: r.name):
        writer.writerow(result.scores.csv_row(result.name))
    return buffer.getvalue()


def cmd_evaluate(config: RunConfig) -> RunRecord:
    """Evaluate every configured report and persist the run directory.

    Per-report failures are isolated: the failing report gets an error entry
    and every other report still scores. Judge outages mark the run partial.
    """
    graph_bytes = Path(config.graph_path).read_bytes()
    graph = load_graph(graph_bytes)
    weights = compute_weights(graph)

    questions: list[ExamQuestion] = []
    audits: list[BiasAuditItem] = []
    exam_bytes = b""
    if config.exam_path is not None:
        exam_bytes = Path(config.exam_path).read_bytes()
        questions, audits = load_exam(exam_bytes)

    named_reports = discover_reports(config.report_paths)
    report_bytes = [(name, path.read_bytes()) for name, path in named_reports]

    run_id = _run_id(config, graph_bytes, exam_bytes, *(body for _, body in report_bytes))
    run_dir = Path(config.out_dir) / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    log_dir = run_dir / "judge-log"

    def evaluate_one(item: tuple[str, bytes]) -> ReportResult:
        name, body = item
        try:
            report = parse_report(body.decode("utf-8"), config.section_depth)
            judge = config.judge.build(log_dir=log_dir)
            workers = config.judge.max_parallel if config.judge.kind == "remote" else 1
            scores, artifacts = evaluate_report(
                report,
                graph,
                weights,
                judge,
                config.metrics,
                questions,
                audits,
                projection_workers=workers,
            )
            _write_json(run_dir / "projection" / f"{name}.json", artifacts["projection"])
            if artifacts["exam"]:
                _write_json(run_dir / "exam" / f"{name}.json", artifacts["exam"])
            return ReportResult(name=name, scores=scores)
        except Exception as exc:  # isolate per-report failures
            failure = MetricScores(diagnostics=[f"evaluation failed: {exc}"])
            return ReportResult(name=name, scores=failure, error=str(exc))

    if config.workers > 1 and len(report_bytes) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(evaluate_one, report_bytes))
    else:
        results = [evaluate_one(item) for item in report_bytes]

    partial = any(result.error for result in results) or any(
        any(note.startswith("partial projection") for note in result.scores.diagnostics)
        for result in results
    )
    record = RunRecord(
        run_id=run_id,
        run_dir=run_dir,
        config_snapshot=config.snapshot(),
        graph_warnings=list(graph.warnings),
        results=results,
        partial=partial,
    )

    _write_json(run_dir / "config.json", config.snapshot())
    _write_json(run_dir / "run.json", {"run_id": run_id})
    if "json" in config.formats:
        _write_json(run_dir / "scores.json", _scores_payload(config, record))
    if "csv" in config.formats:
        (run_dir / "scores.csv").write_text(_scores_csv(record), encoding="utf-8")
    if "markdown" in config.formats:
        rows = [_record_row(result) for result in record.results]
        (run_dir / "summary.md").write_text(
            leaderboard_markdown(sort_rows(rows)), encoding="utf-8"
        )
    return record


def cmd_validate(graph_path: Path) -> tuple[int, list[str]]:
    """Validate a graph file; exit code 0 (ok), 1 (structural errors), 2 (unreadable)."""
    from .errors import GraphFormatError

    try:
        data = Path(graph_path).read_bytes()
    except OSError as exc:
        return 2, [f"cannot read {graph_path}: {exc}"]
    try:
        graph = load_graph(data)
    except GraphFormatError as exc:
        return 1, [f"error: {exc}"]
    findings = [f"warning: {note}" for note in graph.warnings]
    findings.append(f"ok: {len(graph.nodes)} nodes, {len(graph.edges)} links, acyclic")
    return 0, findings


def cmd_exam(
    exam_path: Path,
    report_path: Path,
    judge_settings: JudgeSettings,
    config: MetricConfig = metric_ops.DEFAULT_CONFIG,
    section_depth: int | None = None,
) -> tuple[float | None, float | None, dict]:
    """Run only the exam suite over a report; returns (utility, objectivity, dump)."""
    questions, audits = load_exam(Path(exam_path).read_bytes())
    report = parse_report(Path(report_path).read_text(encoding="utf-8"), section_depth)
    judge = judge_settings.build()
    exam_outcome = run_exam(questions, report, judge)
    audit_outcome = run_bias_audit(audits, report, judge)
    utility = metric_ops.utility(exam_outcome.graded)
    objectivity = metric_ops.objectivity(audit_outcome.scored, config)
    dump = {
        "utility": utility,
        "objectivity": objectivity,
        "graded": [
            {
                "question": answer.question.question,
                "produced": answer.produced,
                "correct": answer.correct,
                "rationale": answer.rationale,
            }
            for answer in exam_outcome.graded
        ],
        "stances": [
            {"thesis_score": s.thesis, "antithesis_score": s.antithesis, "gt_scores": list(gt)}
            for s, gt in audit_outcome.scored
        ],
        "skipped": exam_outcome.skipped + audit_outcome.skipped,
    }
    return utility, objectivity, dump


# --- Leaderboard ----------------------------------------------------------------


def _parse_cell(value: str | None) -> float | None:
    if value is None:
        return None
    value = value.strip()
    if value in ("", "-", "null", "None"):
        return None
    return float(value)


def rows_from_csv(path: Path) -> list[dict]:
    """Read leaderboard rows from a CSV with a name column and metric columns."""
    rows: list[dict] = []
    with open(path, newline="", encoding="utf-8") as handle:
        for raw in csv.DictReader(handle):
            normalized = {key.strip().lower(): value for key, value in raw.items() if key}
            name = (
                normalized.get("name")
                or normalized.get("system")
                or normalized.get("method")
            )
            if not name:
                raise ValueError(f"{path}: rows need a name/system/method column")
            row = {"name": name.strip()}
            for column in LEADERBOARD_COLUMNS[1:]:
                row[column] = _parse_cell(normalized.get(column))
            rows.append(row)
    return rows


def rows_from_scores_json(path: Path) -> list[dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = []
    for entry in payload.get("reports", []):
        scores = entry.get("scores", {})
        row = {"name": entry.get("name", "unnamed")}
        for column in LEADERBOARD_COLUMNS[1:]:
            row[column] = scores.get(column)
        rows.append(row)
    return rows


def _record_row(result: ReportResult) -> dict:
    row = {"name": result.name}
    values = result.scores.to_dict()
    for column in LEADERBOARD_COLUMNS[1:]:
        row[column] = values[column]
    return row


def sort_rows(rows: list[dict], config: MetricConfig = metric_ops.DEFAULT_CONFIG) -> list[dict]:
    """Fill in missing overall scores, then sort by overall descending, name ascending."""
    completed = []
    for row in rows:
        row = dict(row)
        if row.get("overall") is None:
            row["overall"] = metric_ops.overall(
                row.get("coverage"),
                row.get("consistency"),
                row.get("utility"),
                row.get("objectivity"),
                config,
            )
        completed.append(row)
    return sorted(
        completed,
        key=lambda row: (
            row["overall"] is None,
            -(row["overall"] if row["overall"] is not None else 0.0),
            row["name"],
        ),
    )


def _format_cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def leaderboard_markdown(rows: list[dict]) -> str:
    header = ["System", "Overall", "Coverage", "Consistency", "Utility", "Objectivity",
              "Dominance", "Monopolization"]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        cells = [row["name"]] + [_format_cell(row[column]) for column in LEADERBOARD_COLUMNS[1:]]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def leaderboard_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LEADERBOARD_COLUMNS)
    for row in rows:
        writer.writerow(
            [row["name"]] + [_format_cell(row[column]) for column in LEADERBOARD_COLUMNS[1:]]
        )
    return buffer.getvalue()


def cmd_leaderboard(
    inputs: list[Path],
    out_dir: Path | None = None,
    config: MetricConfig = metric_ops.DEFAULT_CONFIG,
) -> tuple[list[dict], str, str]:
    """Build a leaderboard from score CSVs, scores.json files, or run directories."""
    rows: list[dict] = []
    for path in inputs:
        path = Path(path)
        if path.is_dir():
            scores = path / "scores.json"
            if not scores.exists():
                raise FileNotFoundError(f"{path} has no scores.json")
            rows.extend(rows_from_scores_json(scores))
        elif path.suffix == ".json":
            rows.extend(rows_from_scores_json(path))
        else:
            rows.extend(rows_from_csv(path))
    if not rows:
        raise ValueError("no leaderboard rows found")
    ordered = sort_rows(rows, config)
    markdown = leaderboard_markdown(ordered)
    csv_text = leaderboard_csv(ordered)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "leaderboard.md").write_text(markdown, encoding="utf-8")
        (out_dir / "leaderboard.csv").write_text(csv_text, encoding="utf-8")
    return ordered, markdown, csv_text


# --- Meta-evaluation --------------------------------------------------------------


@dataclass
class MetaRecord:
    run_id: str
    run_dir: Path
    responsiveness: ResponsivenessReport | None
    consistency: ConsistencyReport | None
    errors: list[str] = field(default_factory=list)


def _coverage_for(
    report: Report,
    graph: ResearchGraph,
    weights: WeightTable,
    judge: Judge,
) -> float:
    result = project(graph, report, judge)
    return metric_ops.coverage(graph, weights, result).depth_weighted


def cmd_meta(config: RunConfig) -> MetaRecord:
    """Run the perturbation and consistency analyses over the configured reports.

    Responsiveness tracks the coverage score (depth-weighted recall): each
    report is degraded and/or improved per ``perturb_kinds`` and re-scored.
    When extra deterministic evaluator variants are configured via ``taus``,
    per-metric sigma_norm is computed across evaluators on the original
    reports. Perturbed reports are written under ``meta/`` with ``.deg.md`` /
    ``.imp.md`` suffixes plus an edit-log sidecar.
    """
    graph_bytes = Path(config.graph_path).read_bytes()
    graph = load_graph(graph_bytes)
    weights = compute_weights(graph)
    questions: list[ExamQuestion] = []
    audits: list[BiasAuditItem] = []
    if config.exam_path is not None:
        questions, audits = load_exam(Path(config.exam_path).read_bytes())

    named_reports = discover_reports(config.report_paths)
    run_id = _run_id(config, graph_bytes, *(path.read_bytes() for _, path in named_reports))
    run_dir = Path(config.out_dir) / run_id
    meta_dir = run_dir / "meta"
    meta_dir.mkdir(parents=True, exist_ok=True)

    errors: list[str] = []
    triples: list[tuple[float, float | None, float | None]] = []
    parsed: list[tuple[str, Report]] = []
    for name, path in named_reports:
        report = parse_report(path.read_text(encoding="utf-8"), config.section_depth)
        parsed.append((name, report))
        judge = config.judge.build(log_dir=run_dir / "judge-log")
        result = project(graph, report, judge)
        original = metric_ops.coverage(graph, weights, result).depth_weighted

        degraded_score: float | None = None
        improved_score: float | None = None
        if "degrade" in config.perturb_kinds:
            try:
                perturbed, perturbation = degrade(
                    report, graph, result, config.perturb_count, config.seed
                )
                (meta_dir / f"{name}.deg.md").write_text(
                    render_markdown(perturbed), encoding="utf-8"
                )
                _write_json(meta_dir / f"{name}.deg.edits.json", perturbation.to_dict())
                degraded_score = _coverage_for(perturbed, graph, weights, judge)
            except PerturbationError as exc:
                errors.append(f"{name}: degrade failed: {exc}")
        if "improve" in config.perturb_kinds:
            try:
                perturbed, perturbation = improve(
                    report, graph, result, config.perturb_count, config.seed
                )
                (meta_dir / f"{name}.imp.md").write_text(
                    render_markdown(perturbed), encoding="utf-8"
                )
                _write_json(meta_dir / f"{name}.imp.edits.json", perturbation.to_dict())
                improved_score = _coverage_for(perturbed, graph, weights, judge)
            except PerturbationError as exc:
                errors.append(f"{name}: improve failed: {exc}")
        triples.append((original, degraded_score, improved_score))

    responsiveness_report: ResponsivenessReport | None = None
    if triples:
        responsiveness_report = responsiveness(triples)
        _write_json(meta_dir / "responsiveness.json", responsiveness_report.to_dict())

    consistency: ConsistencyReport | None = None
    if config.taus and len(config.taus) >= 2:
        evaluators = [f"tau={tau:g}" for tau in config.taus]
        per_metric: dict[str, list[list[float]]] = {}
        matrix_rows: list[tuple[str, str, str, float]] = []
        columns: list[list[MetricScores]] = []
        for tau in config.taus:
            settings = replace(config.judge, kind="deterministic", tau=tau)
            column: list[MetricScores] = []
            for name, report in parsed:
                judge = settings.build()
                scores, _ = evaluate_report(
                    report, graph, weights, judge, config.metrics, questions, audits
                )
                column.append(scores)
            columns.append(column)
        metric_names = ["coverage", "consistency", "utility", "objectivity", "overall"]
        for metric_name in metric_names:
            matrix: list[list[float]] = []
            for row_index in range(len(parsed)):
                row = [
                    getattr(columns[column_index][row_index], metric_name)
                    for column_index in range(len(evaluators))
                ]
                matrix.append(row)
            if matrix and all(value is not None for row in matrix for value in row):
                per_metric[metric_name] = matrix
                for row_index, (name, _) in enumerate(parsed):
                    for column_index, label in enumerate(evaluators):
                        matrix_rows.append(
                            (name, label, metric_name, matrix[row_index][column_index])
                        )
        if per_metric:
            consistency = consistency_report(per_metric, evaluators)
            _write_json(meta_dir / "consistency.json", consistency.to_dict())
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(["report", "evaluator", "metric", "score"])
            for row_tuple in matrix_rows:
                writer.writerow([row_tuple[0], row_tuple[1], row_tuple[2], f"{row_tuple[3]:.6f}"])
            (meta_dir / "matrix.csv").write_text(buffer.getvalue(), encoding="utf-8")

    _write_json(run_dir / "config.json", config.snapshot())
    if errors:
        _write_json(meta_dir / "errors.json", {"errors": errors})
    return MetaRecord(
        run_id=run_id,
        run_dir=run_dir,
        responsiveness=responsiveness_report,
        consistency=consistency,
        errors=errors,
    )
