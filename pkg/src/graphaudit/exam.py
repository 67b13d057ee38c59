"""Exam suites: fact-recall quizzes and dialectical bias audits.

An exam file carries a ``quiz`` array of self-contained questions (multiple
choice, true/false, fill-in-blank, each with a 0-5 depth tag) and a
``bias_audits`` array of thesis/antithesis items with ground-truth support
scores. Questions are answered closed-context: the judge sees the report and
the question, never the graph or the expected answer. Depth tags are carried
through for breakdowns but do not weight the utility score.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ExamFormatError, JudgeTransportError
from .judge import Judge, StanceScores
from .report import Report
from .text import normalize, token_recall, token_set

_OPTION_PREFIX = re.compile(r"^\(?([A-Za-z])[\).:\-]\s+")


class QuestionKind(str, Enum):
    MULTIPLE_CHOICE = "multiple_choice"
    TRUE_FALSE = "true_false"
    FILL_IN_BLANK = "fill_in_blank"


@dataclass(frozen=True)
class ExamQuestion:
    kind: QuestionKind
    question: str
    options: tuple[str, ...]
    answer: str
    depth_metric: int = 0


@dataclass(frozen=True)
class BiasAuditItem:
    question: str
    thesis: str
    antithesis: str
    gt_scores: tuple[float, float]
    rationale: str = ""


@dataclass(frozen=True)
class GradedAnswer:
    question: ExamQuestion
    produced: str
    correct: bool
    rationale: str


@dataclass
class ExamOutcome:
    """Graded answers plus the questions skipped due to judge failures."""

    graded: list[GradedAnswer]
    skipped: list[str] = field(default_factory=list)


@dataclass
class BiasAuditOutcome:
    scored: list[tuple[StanceScores, tuple[float, float]]]
    skipped: list[str] = field(default_factory=list)


def _normalize_option(text: str) -> str:
    """Normalize an option or produced answer: drop a leading letter marker, then casefold."""
    return normalize(_OPTION_PREFIX.sub("", text.strip()))


def load_exam(data: bytes | str) -> tuple[list[ExamQuestion], list[BiasAuditItem]]:
    """Parse and validate an exam file; raises :class:`ExamFormatError` naming bad items."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ExamFormatError(f"malformed exam file: {exc}") from exc
    if not isinstance(payload, dict):
        raise ExamFormatError("exam file must be a JSON object")

    problems: list[str] = []
    questions: list[ExamQuestion] = []
    for position, item in enumerate(payload.get("quiz", [])):
        label = f"quiz[{position}]"
        if not isinstance(item, dict):
            problems.append(f"{label}: not an object")
            continue
        try:
            kind = QuestionKind(item.get("type"))
        except ValueError:
            problems.append(f"{label}: unknown type {item.get('type')!r}")
            continue
        question = item.get("question")
        if not isinstance(question, str) or not question.strip():
            problems.append(f"{label}: missing question text")
            continue
        raw_options = item.get("options", [])
        if not isinstance(raw_options, list) or not all(
            isinstance(option, str) for option in raw_options
        ):
            problems.append(f"{label}: options must be an array of strings")
            continue
        options = tuple(raw_options)
        if kind is QuestionKind.TRUE_FALSE and not options:
            options = ("True", "False")
        if kind is QuestionKind.MULTIPLE_CHOICE and len(options) < 2:
            problems.append(f"{label}: multiple choice needs at least 2 options")
            continue
        if kind is QuestionKind.FILL_IN_BLANK and options:
            problems.append(f"{label}: fill-in-blank must not carry options")
            continue
        answer = item.get("answer")
        if not isinstance(answer, str) or not answer.strip():
            problems.append(f"{label}: missing answer")
            continue
        if options and _normalize_option(answer) not in {
            _normalize_option(option) for option in options
        }:
            problems.append(f"{label}: answer {answer!r} matches no option")
            continue
        depth = item.get("depth_metric", 0)
        if not isinstance(depth, int) or isinstance(depth, bool) or not 0 <= depth <= 5:
            problems.append(f"{label}: depth_metric {depth!r} outside 0-5")
            continue
        questions.append(ExamQuestion(kind, question.strip(), options, answer.strip(), depth))

    audits: list[BiasAuditItem] = []
    for position, item in enumerate(payload.get("bias_audits", [])):
        label = f"bias_audits[{position}]"
        if not isinstance(item, dict):
            problems.append(f"{label}: not an object")
            continue
        texts = {}
        ok = True
        for key in ("question", "thesis", "antithesis"):
            value = item.get(key)
            if not isinstance(value, str) or not value.strip():
                problems.append(f"{label}: missing {key}")
                ok = False
                break
            texts[key] = value.strip()
        if not ok:
            continue
        if texts["thesis"] == texts["antithesis"]:
            problems.append(f"{label}: thesis and antithesis are identical")
            continue
        gt = item.get("gt_scores")
        if (
            not isinstance(gt, list)
            or len(gt) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in gt)
        ):
            problems.append(f"{label}: gt_scores must be two numbers")
            continue
        if not all(0 <= v <= 10 for v in gt):
            problems.append(f"{label}: gt_scores {gt} outside [0, 10]")
            continue
        rationale = item.get("rationale", "")
        if not isinstance(rationale, str):
            problems.append(f"{label}: rationale must be a string")
            continue
        audits.append(
            BiasAuditItem(
                question=texts["question"],
                thesis=texts["thesis"],
                antithesis=texts["antithesis"],
                gt_scores=(float(gt[0]), float(gt[1])),
                rationale=rationale,
            )
        )

    if problems:
        raise ExamFormatError("invalid exam file: " + "; ".join(problems))
    return questions, audits


def _grade(question: ExamQuestion, produced: str) -> tuple[bool, str]:
    if question.kind is QuestionKind.FILL_IN_BLANK:
        recall = token_recall(token_set(question.answer), token_set(produced))
        return recall >= 0.8, f"answer token recall {recall:.2f} (threshold 0.8)"
    matched = _normalize_option(produced) == _normalize_option(question.answer)
    return matched, "normalized option match" if matched else "option mismatch"


def grade_answer(question: ExamQuestion, produced: str) -> bool:
    """Grade a produced answer against the ground truth.

    Closed-option kinds use normalized exact match (letter prefixes like
    ``b)`` are stripped); fill-in-blank requires at least 0.8 token recall of
    the ground-truth answer in the produced text.
    """
    correct, _ = _grade(question, produced)
    return correct


def run_exam(questions: list[ExamQuestion], report: Report, judge: Judge) -> ExamOutcome:
    """Answer and grade every question with the report as sole context.

    Judge transport failures skip the question with a note; skipped questions
    are excluded from the utility denominator.
    """
    outcome = ExamOutcome(graded=[])
    for position, question in enumerate(questions):
        try:
            produced = judge.answer_exam(question, report)
        except JudgeTransportError as exc:
            outcome.skipped.append(f"quiz[{position}] ungraded: {exc}")
            continue
        correct, rationale = _grade(question, produced)
        outcome.graded.append(GradedAnswer(question, produced, correct, rationale))
    return outcome


def run_bias_audit(
    items: list[BiasAuditItem], report: Report, judge: Judge
) -> BiasAuditOutcome:
    """Extract stance scores for every audit item, never revealing ground truth."""
    outcome = BiasAuditOutcome(scored=[])
    for position, item in enumerate(items):
        try:
            scores = judge.audit_stance(item.thesis, item.antithesis, report)
        except JudgeTransportError as exc:
            outcome.skipped.append(f"bias_audits[{position}] skipped: {exc}")
            continue
        outcome.scored.append((scores, item.gt_scores))
    return outcome
