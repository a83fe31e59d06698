"""Question-entity extraction and entity-set matching.

The live entity set drives the retrieval distiller: a triple survives
filtering only when its head or tail is a member (exact canonical match,
never substrings, never relations).
"""

from __future__ import annotations

import re
from typing import Iterable

from .errors import UnbalancedBracketError
from .kg import KnowledgeGraph, Triple, canonical_entity

EntitySet = frozenset[str]

_WORD = re.compile(r"\w+")


def make_entity_set(entities: Iterable[str]) -> EntitySet:
    """Canonicalize (trim, lowercase) and drop empties."""
    return frozenset(e for e in (canonical_entity(s) for s in entities) if e)


def extract_bracketed(question: str) -> list[str]:
    """Contents of each balanced [...] span, in order, trimmed.

    Nested or unbalanced brackets raise UnbalancedBracketError carrying the
    character offset.
    """
    spans: list[str] = []
    open_at: int | None = None
    for i, ch in enumerate(question):
        if ch == "[":
            if open_at is not None:
                raise UnbalancedBracketError(i, "nested '[' is not supported")
            open_at = i
        elif ch == "]":
            if open_at is None:
                raise UnbalancedBracketError(i, "']' without matching '['")
            spans.append(question[open_at + 1 : i].strip())
            open_at = None
    if open_at is not None:
        raise UnbalancedBracketError(open_at, "unclosed '['")
    return spans


def triple_matches(t: Triple, es: EntitySet | set[str]) -> bool:
    """True iff the triple's head or tail is in the entity set (exact match)."""
    return canonical_entity(t.head) in es or canonical_entity(t.tail) in es


def _lower_preserving_length(s: str) -> str:
    # str.lower() can change length for a handful of code points; offsets
    # into the original string must stay valid, so such chars stay as-is.
    low = s.lower()
    if len(low) == len(s):
        return low
    return "".join(c.lower() if len(c.lower()) == 1 else c for c in s)


class EntityScanner:
    """Greedy longest-match scanner of text against an entity vocabulary.

    Matches occur at word boundaries only, left to right, non-overlapping;
    the longest vocabulary entry wins at each position. Entities that do
    not start with a word character are not scannable.
    """

    def __init__(self, vocabulary: Iterable[str]):
        self._by_first_word: dict[str, list[str]] = {}
        for entity in vocabulary:
            entity = canonical_entity(entity)
            m = _WORD.match(entity)
            if not m:
                continue
            self._by_first_word.setdefault(m.group(0), []).append(entity)
        for bucket in self._by_first_word.values():
            bucket.sort(key=len, reverse=True)

    def scan(self, text: str) -> list[tuple[int, int, str]]:
        """Non-overlapping (start, end, matched_lowercase) spans, left to right."""
        low = _lower_preserving_length(text)
        matches: list[tuple[int, int, str]] = []
        cursor = 0
        for word in _WORD.finditer(low):
            start = word.start()
            if start < cursor:
                continue
            candidates = self._by_first_word.get(word.group(0))
            if not candidates:
                continue
            for entity in candidates:
                end = start + len(entity)
                if low[start:end] != entity:
                    continue
                if end < len(low) and _WORD.match(low[end]):
                    continue  # entity must end at a word boundary
                matches.append((start, end, entity))
                cursor = end
                break
        return matches


def fallback_entity_scan(question: str, kg: KnowledgeGraph) -> list[str]:
    """Vocabulary scan for bracket-free questions.

    Greedy longest-match of the lowercased question against the KG entity
    vocabulary at word boundaries; returns the matched (lowercase) spans.
    """
    if kg._scanner is None:
        kg._scanner = EntityScanner(kg.adjacency.keys())
    return [match for _, _, match in kg._scanner.scan(question)]


def question_entities(question: str, kg: KnowledgeGraph) -> EntitySet:
    """Initial entity set for a question: bracketed spans, else vocabulary scan."""
    bracketed = extract_bracketed(question)
    if bracketed:
        return make_entity_set(bracketed)
    return make_entity_set(fallback_entity_scan(question, kg))
