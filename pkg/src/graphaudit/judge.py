"""Pluggable semantic judgments: claim presence, closed-context QA, stance audits.

Two backends share one interface. The deterministic backend reduces every
judgment to normalized token recall, so the whole metric pipeline runs
offline and reproducibly. The remote backend delegates the same judgments to
a chat-completion HTTP endpoint and is a drop-in replacement. The bundled
prompt templates are this package's own wording, not tuned to any particular
judge model.

Closed-context rule: exam and stance requests never contain graph content or
ground-truth answers, only the report and the question materials.
"""

from __future__ import annotations

import json
import os
import re
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import httpx

from .errors import JudgeTransportError
from .graph import GraphNode
from .report import Report, render_markdown
from .text import best_sentence_recall, token_recall, token_set, union_tokens

if TYPE_CHECKING:
    from .exam import ExamQuestion

_TRUE_FALSE_OPTIONS = ("True", "False")


@dataclass(frozen=True)
class PresenceVerdict:
    node_id: str
    hit: bool
    rationale: str
    confidence: float


@dataclass(frozen=True)
class StanceScores:
    """Evidentiary support extracted from a report for two opposing positions, 0-10 each."""

    thesis: float
    antithesis: float


class Judge(ABC):
    """Common surface for semantic judgments needed by the metrics."""

    def __init__(self) -> None:
        self.diagnostics: list[str] = []

    def drain_diagnostics(self) -> list[str]:
        notes, self.diagnostics = self.diagnostics, []
        return notes

    @abstractmethod
    def assess_presence(self, node: GraphNode, report: Report) -> PresenceVerdict:
        """Decide whether the node's claim is semantically present in the report."""

    @abstractmethod
    def answer_exam(self, question: "ExamQuestion", report: Report) -> str:
        """Answer a question using only the report as context."""

    @abstractmethod
    def audit_stance(self, thesis: str, antithesis: str, report: Report) -> StanceScores:
        """Score how strongly the report supports each side, without seeing ground truth."""


def _question_options(question: "ExamQuestion") -> tuple[str, ...]:
    if question.options:
        return tuple(question.options)
    if question.kind.value == "true_false":
        return _TRUE_FALSE_OPTIONS
    return ()


class DeterministicJudge(Judge):
    """Token-recall oracle: pure, offline, and exactly reproducible.

    Presence is sentence-scoped: a node is a hit when some single sentence
    covers at least ``tau`` of the node's tokens, which keeps tokens scattered
    across unrelated sentences from producing spurious hits. Exam options and
    stance sides are scored against the whole report's token set.
    """

    def __init__(self, tau: float = 0.6):
        super().__init__()
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"tau must be within [0, 1], got {tau}")
        self.tau = tau

    def assess_presence(self, node: GraphNode, report: Report) -> PresenceVerdict:
        sentence_tokens = [tokens for _, _, tokens in report.sentence_tokens()]
        if not sentence_tokens:
            return PresenceVerdict(node.id, False, "report has no sentences", 1.0)
        recall, index = best_sentence_recall(token_set(node.content), sentence_tokens)
        hit = recall >= self.tau
        rationale = (
            f"best sentence token recall {recall:.3f} at sentence {index} "
            f"(threshold {self.tau})"
        )
        return PresenceVerdict(node.id, hit, rationale, 1.0)

    def answer_exam(self, question: "ExamQuestion", report: Report) -> str:
        sentence_tokens = [tokens for _, _, tokens in report.sentence_tokens()]
        options = _question_options(question)
        if options:
            report_tokens = union_tokens(sentence_tokens)
            recalls = [token_recall(token_set(option), report_tokens) for option in options]
            best = max(recalls)
            choice = recalls.index(best)
            if best == 0.0:
                self.diagnostics.append(
                    f"no option overlaps the report for question {question.question[:60]!r}; "
                    "defaulted to the first option"
                )
            return options[choice]
        # Fill-in-blank: extract the report sentence closest to the question stem.
        if not sentence_tokens:
            self.diagnostics.append("empty report; fill-in-blank answered with empty text")
            return ""
        _, index = best_sentence_recall(token_set(question.question), sentence_tokens)
        sentences = [sentence for _, _, sentence in report.iter_sentences()]
        return sentences[index if index is not None else 0]

    def audit_stance(self, thesis: str, antithesis: str, report: Report) -> StanceScores:
        report_tokens = union_tokens([tokens for _, _, tokens in report.sentence_tokens()])

        def side_score(side: str) -> float:
            recall = token_recall(token_set(side), report_tokens)
            return float(round(10 * min(max(recall, 0.0), 1.0)))

        return StanceScores(thesis=side_score(thesis), antithesis=side_score(antithesis))


# --- Remote backend -----------------------------------------------------------

PRESENCE_SYSTEM = (
    "You verify whether a claim is semantically present in a report. "
    "Reply 'yes' or 'no' on the first line, then one short sentence of rationale."
)
EXAM_SYSTEM = (
    "You answer questions using only the report provided in the message. "
    "Do not use outside knowledge. If the report does not contain the answer, "
    "give your best guess from the report alone."
)
STANCE_SYSTEM = (
    "You audit how strongly a report supports each of two opposing positions. "
    "Judge only from the report text. Reply with exactly two lines: "
    "'thesis: <integer 0-10>' and 'antithesis: <integer 0-10>'."
)

_YES_NO = re.compile(r"[a-z]+")
_THESIS_SCORE = re.compile(r"\bthesis\b[^0-9-]*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_ANTITHESIS_SCORE = re.compile(r"\bantithesis\b[^0-9-]*(-?\d+(?:\.\d+)?)", re.IGNORECASE)


def build_presence_messages(claim: str, report_markdown: str) -> list[dict[str, str]]:
    return [
        {"role": "system", "content": PRESENCE_SYSTEM},
        {
            "role": "user",
            "content": (
                f"Claim:\n{claim}\n\nReport:\n{report_markdown}\n\n"
                "Is the claim semantically present in the report?"
            ),
        },
    ]


def build_exam_messages(question: "ExamQuestion", report_markdown: str) -> list[dict[str, str]]:
    options = _question_options(question)
    option_block = (
        "\n\nOptions:\n" + "\n".join(f"- {option}" for option in options) if options else ""
    )
    return [
        {"role": "system", "content": EXAM_SYSTEM},
        {
            "role": "user",
            "content": (
                f"Report:\n{report_markdown}\n\nQuestion: {question.question}{option_block}\n\n"
                "Answer concisely."
            ),
        },
    ]


def build_stance_messages(
    thesis: str, antithesis: str, report_markdown: str
) -> list[dict[str, str]]:
    return [
        {"role": "system", "content": STANCE_SYSTEM},
        {
            "role": "user",
            "content": (
                f"Report:\n{report_markdown}\n\n"
                f"Thesis: {thesis}\nAntithesis: {antithesis}\n\n"
                "How strongly does the report's evidence support each position?"
            ),
        },
    ]


class RemoteJudge(Judge):
    """Chat-completion backend with a parallel-request cap and request logging.

    The endpoint receives ``{model, messages, temperature}`` and must return
    an assistant message. The bearer credential is read from the environment
    variable named by ``api_key_env`` at request time. Transport failures are
    retried once and then raised as :class:`JudgeTransportError`; malformed
    replies are retried once and then scored conservatively with a diagnostic.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        temperature: float = 0.0,
        timeout: float = 30.0,
        max_parallel: int = 4,
        api_key_env: str = "GRAPHAUDIT_API_KEY",
        log_dir: str | Path | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__()
        if max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        self.base_url = base_url
        self.model = model
        self.temperature = temperature
        self.api_key_env = api_key_env
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self._semaphore = threading.BoundedSemaphore(max_parallel)
        self._log_lock = threading.Lock()
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _chat(self, kind: str, messages: list[dict[str, str]]) -> str:
        payload = {"model": self.model, "messages": messages, "temperature": self.temperature}
        headers = {}
        credential = os.environ.get(self.api_key_env)
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        last_error: Exception | None = None
        for _ in range(2):
            try:
                with self._semaphore:
                    response = self._client.post(self.base_url, json=payload, headers=headers)
                response.raise_for_status()
                body = response.json()
                text = body["choices"][0]["message"]["content"]
                if not isinstance(text, str):
                    raise KeyError("assistant content is not text")
                self._log(kind, messages, text)
                return text
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise JudgeTransportError(f"{kind} request failed after retry: {last_error}")

    def _log(self, kind: str, messages: list[dict[str, str]], response: str) -> None:
        if self.log_dir is None:
            return
        record = json.dumps(
            {"kind": kind, "request": messages, "response": response}, sort_keys=True
        )
        with self._log_lock:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            with open(self.log_dir / "judge_requests.jsonl", "a", encoding="utf-8") as handle:
                handle.write(record + "\n")

    def assess_presence(self, node: GraphNode, report: Report) -> PresenceVerdict:
        messages = build_presence_messages(node.content, render_markdown(report))
        for attempt in range(2):
            reply = self._chat("presence", messages)
            first_word = _YES_NO.search(reply.casefold())
            if first_word and first_word.group(0) in ("yes", "no"):
                rationale = reply.strip().splitlines()
                return PresenceVerdict(
                    node_id=node.id,
                    hit=first_word.group(0) == "yes",
                    rationale=rationale[1].strip() if len(rationale) > 1 else reply.strip(),
                    confidence=1.0,
                )
        self.diagnostics.append(
            f"judge reply for node {node.id!r} was not yes/no after retry; scored as miss"
        )
        return PresenceVerdict(node.id, False, "unparseable judge reply", 0.0)

    def answer_exam(self, question: "ExamQuestion", report: Report) -> str:
        return self._chat("exam", build_exam_messages(question, render_markdown(report))).strip()

    def audit_stance(self, thesis: str, antithesis: str, report: Report) -> StanceScores:
        messages = build_stance_messages(thesis, antithesis, render_markdown(report))
        for attempt in range(2):
            reply = self._chat("stance", messages)
            thesis_match = _THESIS_SCORE.search(reply)
            antithesis_match = _ANTITHESIS_SCORE.search(reply)
            if thesis_match and antithesis_match:
                return StanceScores(
                    thesis=self._clamp_score(float(thesis_match.group(1))),
                    antithesis=self._clamp_score(float(antithesis_match.group(1))),
                )
        self.diagnostics.append("stance reply unparseable after retry; scored 0/0")
        return StanceScores(0.0, 0.0)

    def _clamp_score(self, value: float) -> float:
        if not 0.0 <= value <= 10.0:
            self.diagnostics.append(f"stance score {value} out of [0, 10]; clamped")
        return min(max(value, 0.0), 10.0)
