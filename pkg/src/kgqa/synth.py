"""Synthetic knowledge graphs and questions for tests and benchmarks."""

from __future__ import annotations

import random
from .kg import KnowledgeGraph

RELATIONS = (
    "directed_by",
    "starred_actors",
    "release_year",
    "in_language",
    "has_genre",
    "written_by",
    "has_tags",
)


def synthetic_kg(n_triples: int, seed: int = 0, entity_pool: int | None = None) -> KnowledgeGraph:
    """A movie-domain-shaped random KG with `n_triples` facts.

    Heads draw from a film pool and tails from a person/attribute pool so
    entities repeat across triples the way real KGs do.
    """
    rng = random.Random(seed)
    if entity_pool is None:
        entity_pool = max(4, n_triples // 5)
    n_films = max(2, entity_pool // 2)
    n_values = max(2, entity_pool - n_films)
    rows = []
    for _ in range(n_triples):
        head = f"Film_{rng.randrange(n_films)}"
        relation = RELATIONS[rng.randrange(len(RELATIONS))]
        tail = f"Value_{rng.randrange(n_values)}"
        rows.append((head, relation, tail))
    return KnowledgeGraph(rows)


def synthetic_questions(kg: KnowledgeGraph, n: int, seed: int = 0) -> list[str]:
    """Bracketed single-entity questions over random KG heads."""
    rng = random.Random(seed)
    heads = sorted({t.head for t in kg.triples})
    templates = (
        "what facts involve [{}] overall?",
        "which records mention [{}] anywhere?",
        "what is known about [{}] in this graph?",
    )
    return [templates[rng.randrange(len(templates))].format(heads[rng.randrange(len(heads))]) for _ in range(n)]
