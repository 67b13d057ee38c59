"""Markdown report parsing: sections, sentences, citation marks, references.

Reports under audit are markdown documents with bracketed integer citations
(``[1]``, ``[2][7]``) and a trailing reference list. Parsing is lossy but
deterministic: prose is reduced to sentences, fenced code blocks are ignored,
and every citation mark either resolves against the reference list or is
recorded as a diagnostic. The derived citation distribution and per-section
source presence feed the citation-health metrics.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

_HEADING = re.compile(r"^(#{1,6})\s+(.*)$")
_MARK = re.compile(r"\[(\d+)\]")
_REF_BRACKET = re.compile(r"^\s*\[(\d+)\]\s*(.*)$")
_REF_DOTTED = re.compile(r"^\s*(\d+)[.)]\s+(.*)$")
_URL = re.compile(r"(\w[\w+.-]*://\S+|www\.\S+)")
_FENCE = re.compile(r"^\s*```")


@dataclass(frozen=True)
class ReferenceEntry:
    index: int
    url: str
    title: str | None = None


@dataclass
class Section:
    ordinal: int
    heading: str
    depth: int
    sentences: list[str]
    citation_marks: Counter[int]


@dataclass
class Report:
    title: str | None
    sections: list[Section]
    references: list[ReferenceEntry]
    diagnostics: list[str] = field(default_factory=list)
    unresolved_marks: Counter[int] = field(default_factory=Counter)
    _token_cache: list[tuple[int, int, frozenset[str]]] | None = field(
        default=None, repr=False, compare=False
    )

    def iter_sentences(self):
        for section_index, section in enumerate(self.sections):
            for sentence_index, sentence in enumerate(section.sentences):
                yield section_index, sentence_index, sentence

    def sentence_tokens(self) -> list[tuple[int, int, frozenset[str]]]:
        """Token sets of every sentence, cached; reports are immutable after parse."""
        if self._token_cache is None:
            from .text import token_set

            self._token_cache = [
                (si, pi, token_set(sentence)) for si, pi, sentence in self.iter_sentences()
            ]
        return self._token_cache


@dataclass(frozen=True)
class CitationDistribution:
    counts: dict[int, int]
    proportions: dict[int, float]
    unique_sources: int
    total: int


@dataclass(frozen=True)
class SectionPresence:
    section_counts: dict[int, int]
    section_total: int


def extract_marks(text: str) -> list[int]:
    """All bracketed integer citation marks in ``text``, in order."""
    return [int(m) for m in _MARK.findall(text)]


def split_sentences(text: str) -> list[str]:
    """Split prose on terminal punctuation at bracket depth zero.

    A ``.``, ``!`` or ``?`` ends a sentence only when it sits outside any
    ``[]``/``()``/``{}`` nesting and is followed by whitespace or the end of
    the text, so decimals and bracketed asides stay intact.
    """
    sentences: list[str] = []
    buffer: list[str] = []
    depth = 0
    for position, char in enumerate(text):
        buffer.append(char)
        if char in "([{":
            depth += 1
        elif char in ")]}":
            depth = max(0, depth - 1)
        elif char in ".!?" and depth == 0:
            follower = text[position + 1] if position + 1 < len(text) else " "
            if follower.isspace():
                sentence = "".join(buffer).strip()
                if sentence:
                    sentences.append(sentence)
                buffer = []
    tail = "".join(buffer).strip()
    if tail:
        sentences.append(tail)
    return sentences


def parse_report(markdown_text: str, section_depth: int | None = None) -> Report:
    """Parse markdown into a :class:`Report`.

    Any heading starts a new section; text before the first heading becomes
    section 1 with an empty heading. ``section_depth`` caps the heading depth
    that opens a section (deeper headings are treated as body text). Sections
    whose heading is ``references`` (case-insensitive) are parsed as the
    reference list and excluded from the content sections. Nothing raises:
    unparseable reference lines and unresolved marks become diagnostics.
    """
    diagnostics: list[str] = []
    max_depth = section_depth if section_depth else 6

    blocks: list[tuple[str, int, list[str]]] = []
    heading, depth, body = "", 0, []
    title: str | None = None
    saw_heading = False
    in_fence = False
    for line in markdown_text.splitlines():
        if _FENCE.match(line):
            in_fence = not in_fence
            continue
        if in_fence:
            continue
        match = _HEADING.match(line)
        if match and len(match.group(1)) <= max_depth:
            if body or saw_heading:
                blocks.append((heading, depth, body))
            heading, depth, body = match.group(2).strip(), len(match.group(1)), []
            if not saw_heading and depth == 1:
                title = heading or None
            saw_heading = True
        else:
            body.append(line)
    if body or saw_heading:
        blocks.append((heading, depth, body))
    if in_fence:
        diagnostics.append("unterminated code fence")

    references: list[ReferenceEntry] = []
    ref_indices: set[int] = set()
    content_blocks: list[tuple[str, int, list[str]]] = []
    for heading, depth, body in blocks:
        if heading.strip().lower() == "references":
            _parse_reference_lines(body, references, ref_indices, diagnostics)
        else:
            content_blocks.append((heading, depth, body))
    # Drop a blank preamble so documents that open with a heading start clean.
    if content_blocks and content_blocks[0][1] == 0 and not any(
        line.strip() for line in content_blocks[0][2]
    ):
        content_blocks = content_blocks[1:]

    sections: list[Section] = []
    unresolved: Counter[int] = Counter()
    for ordinal, (heading, depth, body) in enumerate(content_blocks, start=1):
        sentences = split_sentences(" ".join(line.strip() for line in body if line.strip()))
        marks: Counter[int] = Counter()
        for sentence in sentences:
            for mark in extract_marks(sentence):
                if mark in ref_indices:
                    marks[mark] += 1
                else:
                    unresolved[mark] += 1
        sections.append(Section(ordinal, heading, depth, sentences, marks))

    for mark in sorted(unresolved):
        diagnostics.append(
            f"unresolved citation mark [{mark}] ({unresolved[mark]} occurrence(s))"
        )
    if references and not unresolved and not any(s.citation_marks for s in sections):
        diagnostics.append("reference list present but no bracketed citation marks found")

    return Report(
        title=title,
        sections=sections,
        references=references,
        diagnostics=diagnostics,
        unresolved_marks=unresolved,
    )


def _parse_reference_lines(
    body: list[str],
    references: list[ReferenceEntry],
    ref_indices: set[int],
    diagnostics: list[str],
) -> None:
    for line in body:
        if not line.strip():
            continue
        match = _REF_BRACKET.match(line) or _REF_DOTTED.match(line)
        if not match:
            diagnostics.append(f"unparseable reference line: {line.strip()[:80]!r}")
            continue
        index = int(match.group(1))
        rest = match.group(2).strip()
        if index in ref_indices:
            diagnostics.append(f"duplicate reference index [{index}]; keeping the first entry")
            continue
        url_match = _URL.search(rest)
        if url_match:
            url = url_match.group(1)
            leftover = (rest[: url_match.start()] + rest[url_match.end() :]).strip(" \t-–,;:")
            title = leftover or None
        else:
            url = ""
            title = rest or None
            diagnostics.append(f"reference [{index}] has no recognizable URL")
        references.append(ReferenceEntry(index=index, url=url, title=title))
        ref_indices.add(index)


def citation_distribution(report: Report) -> CitationDistribution:
    """Count every resolved citation mark and derive per-source proportions."""
    counts: Counter[int] = Counter()
    for section in report.sections:
        counts.update(section.citation_marks)
    total = sum(counts.values())
    proportions = (
        {source: count / total for source, count in counts.items()} if total else {}
    )
    return CitationDistribution(
        counts=dict(counts),
        proportions=proportions,
        unique_sources=len(counts),
        total=total,
    )


def section_presence(report: Report) -> SectionPresence:
    """Per-source count of sections citing it, and the content section total."""
    section_counts: dict[int, int] = {}
    for section in report.sections:
        for source in section.citation_marks:
            section_counts[source] = section_counts.get(source, 0) + 1
    return SectionPresence(
        section_counts=section_counts, section_total=len(report.sections)
    )


def render_markdown(report: Report) -> str:
    """Render a report back to canonical markdown (headings, sentences, references)."""
    lines: list[str] = []
    for section in report.sections:
        if section.depth > 0:
            lines.append("#" * section.depth + " " + section.heading)
        if section.sentences:
            lines.append(" ".join(section.sentences))
        lines.append("")
    if report.references:
        lines.append("## References")
        for ref in report.references:
            entry = f"[{ref.index}] {ref.url}" if ref.url else f"[{ref.index}]"
            if ref.title:
                entry += f" {ref.title}"
            lines.append(entry)
        lines.append("")
    return "\n".join(lines)


def report_to_dict(report: Report) -> dict:
    """JSON-serializable dump of a parsed report, for debugging."""
    return {
        "title": report.title,
        "sections": [
            {
                "ordinal": section.ordinal,
                "heading": section.heading,
                "depth": section.depth,
                "sentences": list(section.sentences),
                "citation_marks": {str(k): v for k, v in sorted(section.citation_marks.items())},
            }
            for section in report.sections
        ],
        "references": [
            {"index": ref.index, "url": ref.url, "title": ref.title}
            for ref in report.references
        ],
        "unresolved_marks": {str(k): v for k, v in sorted(report.unresolved_marks.items())},
        "diagnostics": list(report.diagnostics),
    }


def dump_report_json(report: Report) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)
