"""Shared fixtures: small KGs and the planted-chain oracle setup."""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from kgqa import KnowledgeGraph, OracleEmbedder, QAPair, build_index, verbalize
from kgqa.multihop import boost


@pytest.fixture
def movie_kg() -> KnowledgeGraph:
    return KnowledgeGraph(
        [
            ("Ginger Rogers", "starred_actors", "Primrose Path"),
            ("Primrose Path", "directed_by", "Gregory La Cava"),
            ("Primrose Path", "release_year", "1940"),
            ("Top Hat", "starred_actors", "Ginger Rogers"),
        ]
    )


@dataclass
class ChainSetup:
    """A KG of disjoint planted chains plus the oracle wiring to walk them.

    Each question head appears in exactly one triple, so the gold path is
    the only admissible one; the oracle embedder aliases every (possibly
    boosted) question to the verbalization of the next gold triple.
    """

    kg: KnowledgeGraph
    embedder: OracleEmbedder
    index: object
    one_hop: list[tuple[QAPair, tuple[int, ...]]]  # (pair, gold triple ids)
    two_hop: list[tuple[QAPair, tuple[int, ...]]]

    @property
    def all_pairs(self):
        return self.one_hop + self.two_hop


def make_chain_setup(n_one_hop_chains: int = 10, n_two_hop_chains: int = 10,
                     questions_per_chain: int = 10) -> ChainSetup:
    rows = []
    one_chain_ids = []
    for i in range(n_one_hop_chains):
        one_chain_ids.append(len(rows))
        rows.append((f"Start_{i}", "linked_to", f"End_{i}"))
    two_chain_ids = []
    for i in range(n_two_hop_chains):
        two_chain_ids.append((len(rows), len(rows) + 1))
        rows.append((f"Origin_{i}", "step_one", f"Middle_{i}"))
        rows.append((f"Middle_{i}", "step_two", f"Target_{i}"))
    kg = KnowledgeGraph(rows)

    aliases: dict[str, str] = {}
    one_hop = []
    for i, tid in enumerate(one_chain_ids):
        t = kg.triples[tid]
        for v in range(questions_per_chain):
            q = f"probe {v}: what links from [{t.head}]?"
            aliases[q] = verbalize(t).text
            one_hop.append((QAPair(q, (t.tail,), 1, 0), (tid,)))
    two_hop = []
    for i, (tid1, tid2) in enumerate(two_chain_ids):
        t1, t2 = kg.triples[tid1], kg.triples[tid2]
        for v in range(questions_per_chain):
            q = f"probe {v}: what lies two steps from [{t1.head}]?"
            aliases[q] = verbalize(t1).text
            aliases[boost(q, [tid1], kg)] = verbalize(t2).text
            two_hop.append((QAPair(q, (t2.tail,), 2, 0), (tid1, tid2)))

    embedder = OracleEmbedder(aliases, dimension=64)
    index = build_index(kg, embedder)
    return ChainSetup(kg, embedder, index, one_hop, two_hop)


@pytest.fixture(scope="session")
def chain_setup() -> ChainSetup:
    return make_chain_setup()
