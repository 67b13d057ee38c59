"""Text normalization and token-overlap scoring used by every semantic check.

All deterministic judgments in this package reduce to token recall under a
single normalization: casefold, map ``&`` to ``and``, replace punctuation
with spaces, collapse whitespace. Keeping one implementation here makes the
presence checks, exam grading, and perturbation targeting agree exactly.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence

_PUNCT = re.compile(r"[^0-9a-z\s]+")
_WS = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Casefold, expand ``&`` to ``and``, strip punctuation, collapse whitespace."""
    lowered = text.casefold().replace("&", " and ")
    return _WS.sub(" ", _PUNCT.sub(" ", lowered)).strip()


def token_set(text: str) -> frozenset[str]:
    """Normalized tokens of ``text`` as a set."""
    normalized = normalize(text)
    return frozenset(normalized.split()) if normalized else frozenset()


def token_recall(target: frozenset[str], context: frozenset[str]) -> float:
    """Fraction of ``target`` tokens present in ``context``; 0.0 for an empty target."""
    if not target:
        return 0.0
    return len(target & context) / len(target)


def best_sentence_recall(
    target: frozenset[str], sentence_tokens: Iterable[frozenset[str]]
) -> tuple[float, int | None]:
    """Maximum single-sentence recall of ``target`` and the first index attaining it.

    Returns ``(0.0, None)`` when there are no sentences.
    """
    best = 0.0
    best_index: int | None = None
    for index, tokens in enumerate(sentence_tokens):
        recall = token_recall(target, tokens)
        if best_index is None or recall > best:
            best = recall
            best_index = index
    return best, best_index


def union_tokens(sentence_tokens: Sequence[frozenset[str]]) -> frozenset[str]:
    """Union of all sentence token sets."""
    merged: set[str] = set()
    for tokens in sentence_tokens:
        merged |= tokens
    return frozenset(merged)
