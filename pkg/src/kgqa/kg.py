"""Knowledge-graph store: triple ingestion, adjacency index, verbalization.

Triples are (head, relation, tail) facts. The graph is immutable after
construction; ids are 0-based ingest order and stay stable across
serialization round-trips.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import TripleFileError

_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z])(?=[A-Z])")


@dataclass(frozen=True)
class Triple:
    """One (head, relation, tail) fact; id equals 0-based ingest order."""

    id: int
    head: str
    relation: str
    tail: str


@dataclass(frozen=True)
class VerbalizedTriple:
    triple_id: int
    text: str


def canonical_entity(entity: str) -> str:
    """Lookup key for an entity: trimmed and lowercased."""
    return entity.strip().lower()


class KnowledgeGraph:
    """Ordered triple store with an entity vocabulary and adjacency index.

    `entities` holds canonical surface forms (trimmed, case preserved);
    `adjacency` maps canonical-lowercase entities to ascending triple ids.
    Instances are treated as immutable; concurrent readers are safe.
    """

    def __init__(self, triples: Iterable[tuple[str, str, str]]):
        rows: list[Triple] = []
        entities: set[str] = set()
        adjacency: dict[str, list[int]] = {}
        for i, (head, relation, tail) in enumerate(triples):
            head, relation, tail = head.strip(), relation.strip(), tail.strip()
            if not head or not relation or not tail:
                raise TripleFileError("empty field in triple", line_number=None, line=f"{head}|{relation}|{tail}")
            rows.append(Triple(i, head, relation, tail))
            for entity in (head, tail):
                entities.add(entity)
                ids = adjacency.setdefault(entity.lower(), [])
                if not ids or ids[-1] != i:
                    ids.append(i)
        if not rows:
            raise TripleFileError("empty knowledge graph")
        self.triples: tuple[Triple, ...] = tuple(rows)
        self.entities: frozenset[str] = frozenset(entities)
        self.adjacency: dict[str, list[int]] = adjacency
        self._scanner = None  # lazily built entity scanner, see entities.py

    def __len__(self) -> int:
        return len(self.triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self.triples == other.triples

    def __repr__(self) -> str:
        return f"KnowledgeGraph(triples={len(self.triples)}, entities={len(self.entities)})"


def parse_triples(source: Iterable[str], format: str = "pipe") -> KnowledgeGraph:
    """Parse a line stream of triples into a KnowledgeGraph.

    Each non-blank, non-comment ("#"-prefixed) line must have exactly three
    fields under the chosen delimiter ("pipe" or "tab"); fields are trimmed.
    Duplicate triples are kept as distinct ids.

    Raises TripleFileError with the offending line number and content for
    malformed lines, and for an entirely empty stream.
    """
    if format == "pipe":
        delimiter = "|"
    elif format == "tab":
        delimiter = "\t"
    else:
        raise ValueError(f"unknown triple format: {format!r}")

    def rows() -> Iterator[tuple[str, str, str]]:
        for line_number, raw in enumerate(source, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(delimiter)]
            if len(fields) != 3:
                raise TripleFileError(
                    f"expected 3 fields separated by {delimiter!r}, got {len(fields)}",
                    line_number=line_number,
                    line=line,
                )
            if not all(fields):
                raise TripleFileError("empty field in triple", line_number=line_number, line=line)
            yield fields[0], fields[1], fields[2]

    return KnowledgeGraph(rows())


def humanize_relation(relation: str) -> str:
    """Render a relation name as lowercase words.

    Underscores become spaces and lowercase->uppercase camelCase boundaries
    are split, e.g. starred_actors -> "starred actors",
    hasConditionsAtAccidentSite -> "has conditions at accident site".
    """
    spaced = _CAMEL_BOUNDARY.sub(" ", relation.replace("_", " "))
    return " ".join(spaced.lower().split())


def verbalize(t: Triple) -> VerbalizedTriple:
    """Render a triple as retrievable text: head, humanized relation, tail.

    Head and tail appear verbatim (the distiller and the masker rely on
    that); the output is a pure function of the triple.
    """
    parts = [t.head, humanize_relation(t.relation), t.tail]
    return VerbalizedTriple(t.id, " ".join(p for p in parts if p))


def entities_of(t: Triple) -> tuple[str, str]:
    """The two entities of a triple: (head, tail). Relations are never entities."""
    return (t.head, t.tail)


def adjacency_lookup(kg: KnowledgeGraph, entity: str) -> list[int]:
    """Ascending triple ids where `entity` (case-insensitive) is head or tail."""
    return list(kg.adjacency.get(canonical_entity(entity), ()))


def save_kg(kg: KnowledgeGraph, directory: str | Path) -> None:
    """Serialize to a directory: triples.tsv plus meta.json (counts, source hash)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for t in kg.triples:
        for field in (t.head, t.relation, t.tail):
            if "\t" in field or "\n" in field or "\r" in field:
                raise TripleFileError(f"field not serializable as TSV: {field!r}")
        if t.head.startswith("#"):
            raise TripleFileError(f"head {t.head!r} would re-parse as a comment line")
        lines.append(f"{t.head}\t{t.relation}\t{t.tail}\n")
    payload = "".join(lines).encode("utf-8")
    (directory / "triples.tsv").write_bytes(payload)
    meta = {
        "triple_count": len(kg.triples),
        "entity_count": len(kg.entities),
        "source_sha256": hashlib.sha256(payload).hexdigest(),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_kg(directory: str | Path) -> KnowledgeGraph:
    """Load a directory written by save_kg, verifying the recorded hash and counts."""
    directory = Path(directory)
    payload = (directory / "triples.tsv").read_bytes()
    meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
    digest = hashlib.sha256(payload).hexdigest()
    if digest != meta.get("source_sha256"):
        raise TripleFileError(f"triples.tsv hash mismatch in {directory}")
    kg = parse_triples(payload.decode("utf-8").splitlines(), format="tab")
    if len(kg.triples) != meta.get("triple_count"):
        raise TripleFileError(f"triple count mismatch in {directory}")
    return kg
