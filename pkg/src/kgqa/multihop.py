"""Iterative multi-hop context retrieval.

Each hop retrieves top-k triples for the current (boosted) question,
distills them against the live entity set and the visited set, appends the
survivors to the question, and replaces the entity set with the newly
reached entities. The trace records every hop for audit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .embedders import Embedder
from .entities import EntitySet, question_entities, triple_matches
from .index import ScoredTriple, TripleIndex, top_k
from .kg import KnowledgeGraph, canonical_entity, verbalize

#: Triples appended within one hop are joined sentence-like.
_TRIPLE_JOIN = ". "


@dataclass(frozen=True)
class HopRecord:
    """State of one retrieval hop: what came back, what survived, and the
    entity frontier left for the next hop."""

    hop_index: int
    k_used: int
    retrieved: tuple[ScoredTriple, ...]
    filtered: tuple[int, ...]
    entity_set_after: EntitySet


@dataclass(frozen=True)
class RetrievalTrace:
    question: str
    hops: tuple[HopRecord, ...]
    visited: frozenset[int]
    augmented_question: str


def k_schedule(n_hops: int, hop_index: int, k: int = 3, single_hop_k: int = 5) -> int:
    """Per-hop retrieval width: 5 for single-hop; k then k^2 for multi-hop,
    and n_hops*k from the third hop on."""
    if hop_index >= n_hops:
        raise ValueError(f"hop_index {hop_index} out of range for {n_hops} hops")
    if n_hops == 1:
        return single_hop_k
    if hop_index == 0:
        return k
    if hop_index == 1:
        return k * k
    return n_hops * k


def distill(retrieved: Sequence[ScoredTriple], es: EntitySet | set[str],
            visited: set[int] | frozenset[int], kg: KnowledgeGraph) -> list[int]:
    """Keep, in rank order, retrieved triples that contain a live entity and
    were not kept on an earlier hop."""
    return [
        st.triple_id
        for st in retrieved
        if st.triple_id not in visited and triple_matches(kg.triples[st.triple_id], es)
    ]


def boost(q: str, filtered: Sequence[int], kg: KnowledgeGraph) -> str:
    """Append the filtered triples' verbalizations to the question."""
    if not filtered:
        return q
    return q + " " + _TRIPLE_JOIN.join(verbalize(kg.triples[i]).text for i in filtered)


def update_entities(filtered: Sequence[int], es_old: EntitySet | set[str],
                    kg: KnowledgeGraph) -> EntitySet:
    """Entities of the filtered triples minus the old set (replacement
    semantics: the frontier moves outward each hop)."""
    reached = set()
    for i in filtered:
        t = kg.triples[i]
        reached.add(canonical_entity(t.head))
        reached.add(canonical_entity(t.tail))
    return frozenset(reached - set(es_old))


def retrieve_context(
    q0: str,
    n_hops: int,
    index: TripleIndex,
    emb: Embedder,
    kg: KnowledgeGraph,
    *,
    entity_set_mode: str = "replace",
    k_per_hop: Sequence[int] | None = None,
) -> RetrievalTrace:
    """Run exactly n_hops of retrieve -> distill -> boost -> update.

    The initial entity set comes from the question's bracketed spans (or a
    vocabulary scan when bracket-free). Empty filtered hops are legal and
    recorded; later hops then run against an empty entity set and filter
    everything.
    """
    if n_hops < 1:
        raise ValueError("n_hops must be >= 1")
    if entity_set_mode not in ("replace", "accumulate"):
        raise ValueError(f"unknown entity_set_mode: {entity_set_mode!r}")
    es = question_entities(q0, kg)
    visited: set[int] = set()
    hops: list[HopRecord] = []
    question = q0
    for hop_index in range(n_hops):
        if k_per_hop:
            k = int(k_per_hop[min(hop_index, len(k_per_hop) - 1)])
        else:
            k = k_schedule(n_hops, hop_index)
        retrieved = top_k(index, emb, question, k)
        filtered = distill(retrieved, es, visited, kg)
        question = boost(question, filtered, kg)
        new_entities = update_entities(filtered, es, kg)
        if entity_set_mode == "accumulate":
            es = frozenset(es | new_entities)
        else:
            es = new_entities
        visited.update(filtered)
        hops.append(HopRecord(hop_index, k, tuple(retrieved), tuple(filtered), es))
    return RetrievalTrace(q0, tuple(hops), frozenset(visited), question)


def trace_to_dict(trace: RetrievalTrace) -> dict:
    """JSON-ready form of a trace (sets sorted for stable output)."""
    return {
        "question": trace.question,
        "n_hops": len(trace.hops),
        "hops": [
            {
                "hop_index": h.hop_index,
                "k_used": h.k_used,
                "retrieved": [{"triple_id": st.triple_id, "score": st.score} for st in h.retrieved],
                "filtered": list(h.filtered),
                "entity_set_after": sorted(h.entity_set_after),
            }
            for h in trace.hops
        ],
        "visited": sorted(trace.visited),
        "augmented_question": trace.augmented_question,
    }


def write_traces_jsonl(traces: Iterable[RetrievalTrace], path: str | Path) -> None:
    """One trace per line, for audit and regression diffing."""
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace_to_dict(trace), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
