"""Hop schedule, distiller, booster, entity-frontier updates, and full traces."""

import pytest

from kgqa import (
    KnowledgeGraph,
    OracleEmbedder,
    ScoredTriple,
    boost,
    build_index,
    distill,
    k_schedule,
    retrieve_context,
    update_entities,
    verbalize,
)
from kgqa.multihop import trace_to_dict


class TestKSchedule:
    def test_single_hop(self):
        assert k_schedule(1, 0) == 5

    def test_two_hop(self):
        assert [k_schedule(2, i) for i in range(2)] == [3, 9]

    def test_three_hop_final(self):
        assert k_schedule(3, 2) == 9

    def test_three_hop_full(self):
        assert [k_schedule(3, i) for i in range(3)] == [3, 9, 9]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            k_schedule(2, 2)


@pytest.fixture
def small_kg():
    return KnowledgeGraph(
        [
            ("A", "r", "B"),   # 0
            ("A", "s", "C"),   # 1
            ("B", "t", "D"),   # 2
            ("E", "u", "F"),   # 3
        ]
    )


class TestDistill:
    def test_entity_and_visited_filters(self, small_kg):
        retrieved = [ScoredTriple(3, 0.9), ScoredTriple(0, 0.8), ScoredTriple(1, 0.7)]
        kept = distill(retrieved, {"a"}, visited={1}, kg=small_kg)
        assert kept == [0]

    def test_identity_when_nothing_filters(self, small_kg):
        retrieved = [ScoredTriple(1, 0.9), ScoredTriple(0, 0.8)]
        assert distill(retrieved, {"a"}, visited=set(), kg=small_kg) == [1, 0]

    def test_empty_entity_set_filters_all(self, small_kg):
        retrieved = [ScoredTriple(0, 1.0)]
        assert distill(retrieved, frozenset(), visited=set(), kg=small_kg) == []

    def test_rank_order_preserved(self, small_kg):
        retrieved = [ScoredTriple(2, 0.9), ScoredTriple(0, 0.5), ScoredTriple(1, 0.1)]
        assert distill(retrieved, {"a", "b"}, visited=set(), kg=small_kg) == [2, 0, 1]


class TestBoost:
    def test_empty_append_is_identity(self, small_kg):
        assert boost("who directed [X]?", [], small_kg) == "who directed [X]?"

    def test_single_triple(self, small_kg):
        assert boost("Q", [0], small_kg) == "Q A r B"

    def test_two_triples_joined_in_rank_order(self, small_kg):
        assert boost("Q", [2, 0], small_kg) == "Q B t D. A r B"


class TestUpdateEntities:
    def test_replacement_semantics(self, small_kg):
        es = update_entities([0, 1], {"a"}, small_kg)
        assert es == frozenset({"b", "c"})

    def test_empty_filtered_empties_the_set(self, small_kg):
        assert update_entities([], {"a"}, small_kg) == frozenset()

    def test_all_already_known(self, small_kg):
        assert update_entities([0], {"a", "b"}, small_kg) == frozenset()


class TestRetrieveContext:
    def _one_hop_setup(self):
        kg = KnowledgeGraph(
            [("E0", "r", "Ans")] + [(f"X{i}", "r", f"Y{i}") for i in range(9)]
        )
        gold = verbalize(kg.triples[0]).text
        emb = OracleEmbedder({"what links from [E0]?": gold})
        return kg, emb, build_index(kg, emb)

    def test_one_hop_recovers_gold(self):
        kg, emb, index = self._one_hop_setup()
        trace = retrieve_context("what links from [E0]?", 1, index, emb, kg)
        assert 0 in trace.hops[0].filtered
        assert len(trace.hops) == 1
        assert trace.hops[0].k_used == 5

    def test_two_hop_chain(self):
        kg = KnowledgeGraph(
            [("E0", "r", "M"), ("M", "s", "Ans")] + [(f"X{i}", "q", f"Y{i}") for i in range(8)]
        )
        q0 = "two step question about [E0]"
        emb = OracleEmbedder(
            {
                q0: verbalize(kg.triples[0]).text,
                boost(q0, [0], kg): verbalize(kg.triples[1]).text,
            }
        )
        index = build_index(kg, emb)
        trace = retrieve_context(q0, 2, index, emb, kg)
        assert trace.hops[0].filtered == (0,)
        assert trace.hops[0].entity_set_after == frozenset({"m"})
        assert trace.hops[1].filtered == (1,)
        assert trace.visited == frozenset({0, 1})
        assert trace.augmented_question == boost(boost(q0, [0], kg), [1], kg)

    def test_unknown_entity_yields_empty_hops(self):
        kg, emb, index = self._one_hop_setup()
        q = "what links from [Nowhere]?"
        trace = retrieve_context(q, 2, index, emb, kg)
        assert all(h.filtered == () for h in trace.hops)
        assert trace.augmented_question == q
        assert len(trace.hops) == 2

    def test_exactly_n_hops(self, chain_setup):
        pair, _ = chain_setup.two_hop[0]
        trace = retrieve_context(pair.question, 2, chain_setup.index, chain_setup.embedder, chain_setup.kg)
        assert len(trace.hops) == 2

    def test_no_triple_filtered_twice(self, chain_setup):
        for pair, _ in chain_setup.all_pairs[:20]:
            trace = retrieve_context(
                pair.question, pair.n_hops, chain_setup.index, chain_setup.embedder, chain_setup.kg
            )
            seen = set()
            for hop in trace.hops:
                assert not (set(hop.filtered) & seen)
                seen |= set(hop.filtered)

    def test_monotone_context_and_decomposition(self):
        kg = KnowledgeGraph(
            [("E0", "r", "M"), ("M", "s", "Ans"), ("Z", "q", "W")]
        )
        q0 = "walk from [E0]"
        emb = OracleEmbedder(
            {
                q0: verbalize(kg.triples[0]).text,
                boost(q0, [0], kg): verbalize(kg.triples[1]).text,
            }
        )
        index = build_index(kg, emb)
        trace = retrieve_context(q0, 2, index, emb, kg)
        # recompute the boosted chain: each hop's query is the previous boost output
        question = q0
        for hop in trace.hops:
            boosted = boost(question, list(hop.filtered), kg)
            assert boosted.startswith(question)
            question = boosted
        assert question == trace.augmented_question

    def test_k_override(self):
        kg, emb, index = self._one_hop_setup()
        trace = retrieve_context("what links from [E0]?", 2, index, emb, kg, k_per_hop=[2, 7])
        assert [h.k_used for h in trace.hops] == [2, 7]
        # override shorter than n_hops repeats its last value
        trace = retrieve_context("what links from [E0]?", 3, index, emb, kg, k_per_hop=[4])
        assert [h.k_used for h in trace.hops] == [4, 4, 4]

    def test_accumulate_mode_keeps_question_entities(self):
        kg = KnowledgeGraph([("E0", "r", "M"), ("E0", "s", "N"), ("M", "t", "Ans")])
        q0 = "about [E0]"
        emb = OracleEmbedder(
            {
                q0: verbalize(kg.triples[0]).text,
                boost(q0, [0], kg): verbalize(kg.triples[1]).text,
            }
        )
        index = build_index(kg, emb)
        # k=1 at hop 0 pins the gold-only first hop; hop 1 sees the whole KG
        kwargs = dict(k_per_hop=[1, 3])
        replace = retrieve_context(q0, 2, index, emb, kg, entity_set_mode="replace", **kwargs)
        accumulate = retrieve_context(q0, 2, index, emb, kg, entity_set_mode="accumulate", **kwargs)
        # hop 1 retrieves (E0, s, N) top-ranked; only accumulate still admits E0
        assert 1 not in replace.hops[1].filtered
        assert 1 in accumulate.hops[1].filtered
        assert "e0" in accumulate.hops[0].entity_set_after
        assert "e0" not in replace.hops[0].entity_set_after

    def test_bad_mode_rejected(self, chain_setup):
        with pytest.raises(ValueError):
            retrieve_context("q", 1, chain_setup.index, chain_setup.embedder, chain_setup.kg,
                             entity_set_mode="bogus")


class TestTraceExport:
    def test_dict_shape(self, chain_setup):
        pair, gold = chain_setup.one_hop[0]
        trace = retrieve_context(pair.question, 1, chain_setup.index, chain_setup.embedder, chain_setup.kg)
        d = trace_to_dict(trace)
        assert d["question"] == pair.question
        assert d["n_hops"] == 1
        assert d["hops"][0]["filtered"] == list(gold)
        assert {"triple_id", "score"} <= set(d["hops"][0]["retrieved"][0])
        assert d["visited"] == sorted(set(d["visited"]))
