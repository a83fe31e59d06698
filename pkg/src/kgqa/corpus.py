"""Knowledge-infusion pretraining data: a 50:50 mix of verbalized triples
and corpus text, each with one salient span masked by a sentinel.

Triple examples mask the head or the tail (seeded coin flip); text examples
mask one entity-vocabulary occurrence. Every example round-trips: replacing
the sentinel in `input` with the target span reproduces the source line.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .entities import EntityScanner
from .errors import CorpusError, KgqaError
from .kg import KnowledgeGraph, Triple, VerbalizedTriple, verbalize

SENTINEL = "<extra_0>"


@dataclass(frozen=True)
class MaskedExample:
    input: str
    target: str
    origin: str  # "triple" | "text"

    def reconstruct(self) -> str:
        """Reinsert the target span; inverse of the masking."""
        prefix = f"{SENTINEL} "
        if not self.target.startswith(prefix):
            raise KgqaError(f"malformed target: {self.target!r}")
        return self.input.replace(SENTINEL, self.target[len(prefix):], 1)


@dataclass(frozen=True)
class CorpusStats:
    triple_examples: int
    text_examples: int
    text_lines_total: int
    text_lines_skipped: int

    def to_dict(self) -> dict:
        return {
            "triple_examples": self.triple_examples,
            "text_examples": self.text_examples,
            "text_lines_total": self.text_lines_total,
            "text_lines_skipped": self.text_lines_skipped,
        }


def mask_triple(v: VerbalizedTriple, t: Triple, rng_seed: int) -> MaskedExample:
    """Mask the head span or the tail span of a verbalized triple."""
    if v.triple_id != t.id or not v.text.startswith(t.head) or not v.text.endswith(t.tail):
        raise KgqaError(f"verbalization does not match triple {t.id}")
    if SENTINEL in v.text:
        raise KgqaError(f"triple text already contains the sentinel: {v.text!r}")
    mask_head = random.Random(rng_seed).random() < 0.5
    if mask_head:
        span = t.head
        masked = SENTINEL + v.text[len(t.head):]
    else:
        span = t.tail
        masked = v.text[: len(v.text) - len(t.tail)] + SENTINEL
    return MaskedExample(masked, f"{SENTINEL} {span}", "triple")


def mask_text(
    line: str,
    scanner: EntityScanner,
    rng_seed: int,
    spans: Sequence[tuple[int, int]] | None = None,
) -> MaskedExample | None:
    """Mask one seeded-random entity occurrence in a text line.

    Occurrences come from the vocabulary scanner (word-boundary,
    longest-match, non-overlapping) unless explicit spans override them.
    Returns None when the line has no occurrence (the caller skips it).
    """
    if spans is None:
        spans = [(start, end) for start, end, _ in scanner.scan(line)]
    else:
        for start, end in spans:
            if not (0 <= start < end <= len(line)):
                raise CorpusError(f"span ({start}, {end}) out of bounds for line of length {len(line)}")
    if not spans:
        return None
    if SENTINEL in line:
        raise CorpusError(f"text line already contains the sentinel: {line!r}")
    start, end = spans[random.Random(rng_seed).randrange(len(spans))]
    return MaskedExample(
        line[:start] + SENTINEL + line[end:],
        f"{SENTINEL} {line[start:end]}",
        "text",
    )


def mix_corpus(
    kg: KnowledgeGraph,
    text: Iterable[str],
    rng_seed: int,
    annotations: Mapping[int, Sequence[tuple[int, int]]] | None = None,
) -> tuple[list[MaskedExample], CorpusStats]:
    """Emit |triples| triple-origin and |triples| text-origin examples.

    Text lines are sampled without replacement while available, then with
    replacement; the interleaving is a deterministic function of the seed.
    `annotations` (1-based line number -> spans) overrides the vocabulary
    scan for those lines.
    """
    rng = random.Random(rng_seed)
    scanner = EntityScanner(kg.adjacency.keys())

    triple_examples = [
        mask_triple(verbalize(t), t, rng.randrange(2**32)) for t in kg.triples
    ]

    maskable: list[tuple[str, Sequence[tuple[int, int]] | None]] = []
    total_lines = 0
    skipped = 0
    for line_number, raw in enumerate(text, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        total_lines += 1
        spans: Sequence[tuple[int, int]] | None = None
        if annotations is not None and line_number in annotations:
            spans = [tuple(s) for s in annotations[line_number]]
        found = spans if spans is not None else scanner.scan(line)
        if found:
            maskable.append((line, spans))
        else:
            skipped += 1
    if not maskable:
        raise CorpusError("no maskable text lines (no entity occurrences found)")

    n = len(kg.triples)
    if len(maskable) >= n:
        chosen = rng.sample(maskable, n)
    else:
        chosen = rng.sample(maskable, len(maskable))
        chosen += [rng.choice(maskable) for _ in range(n - len(maskable))]
    text_examples = []
    for line, spans in chosen:
        example = mask_text(line, scanner, rng.randrange(2**32), spans=spans)
        assert example is not None  # lines were pre-screened as maskable
        text_examples.append(example)

    order = ["triple"] * n + ["text"] * n
    rng.shuffle(order)
    triple_iter = iter(triple_examples)
    text_iter = iter(text_examples)
    stream = [next(triple_iter) if origin == "triple" else next(text_iter) for origin in order]

    stats = CorpusStats(
        triple_examples=n,
        text_examples=n,
        text_lines_total=total_lines,
        text_lines_skipped=skipped,
    )
    return stream, stats


def load_span_annotations(path: str | Path) -> dict[int, list[tuple[int, int]]]:
    """JSON-lines of {line_number, spans: [[start, end], ...]}, 1-based."""
    annotations: dict[int, list[tuple[int, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for row_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                line_number = int(row["line_number"])
                spans = [(int(s[0]), int(s[1])) for s in row["spans"]]
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                raise CorpusError(f"{path}: bad annotation row {row_number}: {exc}") from exc
            annotations[line_number] = spans
    return annotations


def write_corpus(examples: Sequence[MaskedExample], stats: CorpusStats,
                 corpus_path: str | Path, stats_path: str | Path) -> None:
    """JSON-lines of {input, target, origin} plus a stats footer file."""
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(
                {"input": example.input, "target": example.target, "origin": example.origin},
                ensure_ascii=False, sort_keys=True,
            ))
            fh.write("\n")
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
