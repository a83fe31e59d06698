"""Salient-span masking and the 50:50 triple/text mix."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgqa import KnowledgeGraph, mask_text, mask_triple, mix_corpus, verbalize
from kgqa.corpus import SENTINEL, load_span_annotations, write_corpus
from kgqa.entities import EntityScanner
from kgqa.errors import CorpusError, KgqaError
from kgqa.kg import Triple

entity_text = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters="_ "),
    min_size=1,
    max_size=15,
).filter(lambda s: s.strip())

# random.Random(1).random() < 0.5 picks the head; Random(0) picks the tail
HEAD_SEED, TAIL_SEED = 1, 0


class TestMaskTriple:
    triple = Triple(0, "Ginger Rogers", "starred_actors", "Primrose Path")

    def test_head_masked(self):
        example = mask_triple(verbalize(self.triple), self.triple, HEAD_SEED)
        assert example.input == f"{SENTINEL} starred actors Primrose Path"
        assert example.target == f"{SENTINEL} Ginger Rogers"
        assert example.origin == "triple"

    def test_tail_masked(self):
        example = mask_triple(verbalize(self.triple), self.triple, TAIL_SEED)
        assert example.input == f"Ginger Rogers starred actors {SENTINEL}"
        assert example.target == f"{SENTINEL} Primrose Path"

    def test_round_trip(self):
        for seed in range(10):
            example = mask_triple(verbalize(self.triple), self.triple, seed)
            assert example.reconstruct() == verbalize(self.triple).text

    def test_deterministic(self):
        a = mask_triple(verbalize(self.triple), self.triple, 7)
        b = mask_triple(verbalize(self.triple), self.triple, 7)
        assert a == b

    def test_mismatched_verbalization_rejected(self):
        other = Triple(0, "Someone Else", "starred_actors", "Primrose Path")
        with pytest.raises(KgqaError, match="does not match"):
            mask_triple(verbalize(self.triple), other, 0)

    def test_self_loop(self):
        t = Triple(0, "A", "r", "A")
        example = mask_triple(verbalize(t), t, HEAD_SEED)
        assert example.input == f"{SENTINEL} r A"
        assert example.reconstruct() == "A r A"

    @given(st.tuples(entity_text, entity_text, entity_text), st.integers(0, 2**32 - 1))
    def test_round_trip_random(self, fields, seed):
        t = Triple(0, *(f.strip() for f in fields))
        example = mask_triple(verbalize(t), t, seed)
        assert example.reconstruct() == verbalize(t).text


class TestMaskText:
    def _scanner(self):
        kg = KnowledgeGraph(
            [("AccidentNumber_LAX05LA060", "hasConditionsAtAccidentSite", "Visual Conditions")]
        )
        return EntityScanner(kg.adjacency.keys())

    def test_entity_span_masked(self):
        line = "the pilot reported visual conditions at the site"
        example = mask_text(line, self._scanner(), 0)
        assert example is not None
        assert example.input == f"the pilot reported {SENTINEL} at the site"
        assert example.target == f"{SENTINEL} visual conditions"
        assert example.origin == "text"
        assert example.reconstruct() == line

    def test_no_hit_skips(self):
        assert mask_text("nothing relevant here", self._scanner(), 0) is None

    def test_two_occurrences_exactly_one_masked(self):
        line = "visual conditions then visual conditions again"
        seen = set()
        for seed in range(20):
            example = mask_text(line, self._scanner(), seed)
            assert example.input.count(SENTINEL) == 1
            assert example.reconstruct() == line
            seen.add(example.input)
        assert len(seen) == 2  # both occurrences get chosen across seeds

    def test_original_case_preserved(self):
        line = "Visual Conditions prevailed"
        example = mask_text(line, self._scanner(), 0)
        assert example.target == f"{SENTINEL} Visual Conditions"

    def test_explicit_spans_override(self):
        line = "abcdef"
        example = mask_text(line, self._scanner(), 0, spans=[(1, 3)])
        assert example.input == f"a{SENTINEL}def"
        assert example.target == f"{SENTINEL} bc"

    def test_bad_span_rejected(self):
        with pytest.raises(CorpusError):
            mask_text("short", self._scanner(), 0, spans=[(2, 99)])


def _text_lines(kg, n_extra_unmaskable=3):
    lines = [f"report says {t.head} was involved with {t.tail} that day" for t in kg.triples]
    lines += ["no match in this line at all"] * n_extra_unmaskable
    return lines


class TestMixCorpus:
    def _kg(self, n=20):
        return KnowledgeGraph([(f"Alpha_{i}", "linked_to", f"Beta_{i}") for i in range(n)])

    def test_equal_counts(self):
        kg = self._kg(100)
        examples, stats = mix_corpus(kg, _text_lines(kg), rng_seed=0)
        assert stats.triple_examples == 100
        assert stats.text_examples == 100
        assert sum(1 for e in examples if e.origin == "triple") == 100
        assert sum(1 for e in examples if e.origin == "text") == 100

    def test_skip_stats(self):
        kg = self._kg(5)
        _, stats = mix_corpus(kg, _text_lines(kg, n_extra_unmaskable=4), rng_seed=0)
        assert stats.text_lines_skipped == 4
        assert stats.text_lines_total == 9

    def test_deterministic_stream(self):
        kg = self._kg(30)
        lines = _text_lines(kg)
        a, _ = mix_corpus(kg, lines, rng_seed=42)
        b, _ = mix_corpus(kg, list(lines), rng_seed=42)
        assert a == b

    def test_different_seed_different_stream(self):
        kg = self._kg(30)
        lines = _text_lines(kg)
        a, _ = mix_corpus(kg, lines, rng_seed=1)
        b, _ = mix_corpus(kg, lines, rng_seed=2)
        assert a != b

    def test_every_example_round_trips(self):
        kg = self._kg(25)
        examples, _ = mix_corpus(kg, _text_lines(kg), rng_seed=3)
        sources = {verbalize(t).text for t in kg.triples} | set(_text_lines(kg))
        for example in examples:
            assert example.reconstruct() in sources

    def test_sampling_with_replacement_when_text_is_scarce(self):
        kg = self._kg(10)
        lines = [f"only {kg.triples[0].head} appears here", "nothing else maskable"]
        examples, stats = mix_corpus(kg, lines, rng_seed=0)
        assert stats.text_examples == 10

    def test_no_maskable_lines_is_an_error(self):
        kg = self._kg(3)
        with pytest.raises(CorpusError, match="no maskable"):
            mix_corpus(kg, ["nothing here", "or here"], rng_seed=0)

    def test_annotations_override_scan(self):
        kg = self._kg(2)
        lines = ["zzzz yyyy xxxx"]  # no vocabulary hits
        annotations = {1: [(0, 4)]}
        examples, stats = mix_corpus(kg, lines, rng_seed=0, annotations=annotations)
        text_examples = [e for e in examples if e.origin == "text"]
        assert all(e.input.startswith(SENTINEL) for e in text_examples)
        assert stats.text_lines_skipped == 0


class TestCorpusFiles:
    def test_write_and_reload(self, tmp_path):
        kg = KnowledgeGraph([(f"A_{i}", "r", f"B_{i}") for i in range(4)])
        examples, stats = mix_corpus(kg, _text_lines(kg), rng_seed=0)
        write_corpus(examples, stats, tmp_path / "corpus.jsonl", tmp_path / "stats.json")
        rows = [json.loads(line) for line in (tmp_path / "corpus.jsonl").read_text().splitlines()]
        assert len(rows) == 8
        assert all({"input", "target", "origin"} == set(row) for row in rows)
        footer = json.loads((tmp_path / "stats.json").read_text())
        assert footer["triple_examples"] == footer["text_examples"] == 4

    def test_span_annotation_loader(self, tmp_path):
        path = tmp_path / "spans.jsonl"
        path.write_text('{"line_number": 3, "spans": [[0, 5], [8, 12]]}\n')
        assert load_span_annotations(path) == {3: [(0, 5), (8, 12)]}

    def test_bad_annotation_rejected(self, tmp_path):
        path = tmp_path / "spans.jsonl"
        path.write_text('{"line_number": "x"}\n')
        with pytest.raises(CorpusError):
            load_span_annotations(path)
