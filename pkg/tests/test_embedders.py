"""Embedder determinism, unit norms, and the precomputed-file loader."""

import json

import numpy as np
import pytest

from kgqa import HashedTrigramEmbedder, OracleEmbedder, PrecomputedEmbedder, TokenMatrix
from kgqa.embedders import text_sha256, tokenize
from kgqa.errors import ConfigurationError, KgqaError


class TestTokenize:
    def test_lowercase_and_punctuation_split(self):
        assert tokenize("Who directed Top-Hat?") == ["who", "directed", "top", "hat"]

    def test_underscores_kept(self):
        assert tokenize("Pilot_ATL03LA101 flies") == ["pilot_atl03la101", "flies"]


class TestTokenMatrix:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TokenMatrix((), np.zeros((0, 4), dtype=np.float32))

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError, match="non-unit"):
            TokenMatrix(("a",), np.array([[2.0, 0.0]], dtype=np.float32))

    def test_rejects_shape_mismatch(self):
        v = np.eye(2, dtype=np.float32)
        with pytest.raises(ValueError):
            TokenMatrix(("a",), v)


class TestHashedTrigramEmbedder:
    def test_deterministic(self):
        emb = HashedTrigramEmbedder(64)
        a = emb.embed("Ginger Rogers starred actors Primrose Path")
        b = HashedTrigramEmbedder(64).embed("Ginger Rogers starred actors Primrose Path")
        assert a.tokens == b.tokens
        np.testing.assert_array_equal(a.vectors, b.vectors)

    def test_one_vector_per_token(self):
        tm = HashedTrigramEmbedder(16).embed("a bb ccc")
        assert tm.tokens == ("a", "bb", "ccc")
        assert tm.vectors.shape == (3, 16)

    def test_unit_norms(self):
        tm = HashedTrigramEmbedder(64).embed("some words with UPPER case and_underscores")
        np.testing.assert_allclose(np.linalg.norm(tm.vectors, axis=1), 1.0, atol=1e-6)

    def test_no_tokens_raises(self):
        with pytest.raises(ValueError, match="no tokens"):
            HashedTrigramEmbedder(8).embed("?!...")

    def test_zero_dimension_rejected(self):
        with pytest.raises(ConfigurationError):
            HashedTrigramEmbedder(0)

    def test_name_carries_dimension(self):
        assert HashedTrigramEmbedder(32).name == "trigram-d32"


class TestOracleEmbedder:
    def test_alias_produces_identical_matrices(self):
        emb = OracleEmbedder({"the query": "the document"})
        np.testing.assert_array_equal(
            emb.embed("the query").vectors, emb.embed("the document").vectors
        )

    def test_distinct_keys_differ(self):
        emb = OracleEmbedder()
        assert not np.array_equal(emb.embed("a").vectors, emb.embed("b").vectors)

    def test_deterministic_across_instances(self):
        np.testing.assert_array_equal(
            OracleEmbedder().embed("t").vectors, OracleEmbedder().embed("t").vectors
        )


class TestPrecomputedEmbedder:
    def _write(self, path, rows):
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")

    def test_round_trip(self, tmp_path):
        source = HashedTrigramEmbedder(8)
        texts = ["alpha beta", "gamma delta"]
        rows = []
        for text in texts:
            tm = source.embed(text)
            rows.append(
                {
                    "text_hash": text_sha256(text),
                    "tokens": list(tm.tokens),
                    "vectors": tm.vectors.astype(float).tolist(),
                }
            )
        self._write(tmp_path / "emb.jsonl", rows)
        emb = PrecomputedEmbedder.from_jsonl(tmp_path / "emb.jsonl")
        assert emb.dimension == 8
        got = emb.embed("alpha beta")
        assert got.tokens == ("alpha", "beta")
        np.testing.assert_allclose(got.vectors, source.embed("alpha beta").vectors, atol=1e-6)

    def test_missing_text_raises(self, tmp_path):
        tm = HashedTrigramEmbedder(8).embed("known text")
        self._write(
            tmp_path / "emb.jsonl",
            [{"text_hash": text_sha256("known text"), "tokens": list(tm.tokens),
              "vectors": tm.vectors.astype(float).tolist()}],
        )
        emb = PrecomputedEmbedder.from_jsonl(tmp_path / "emb.jsonl")
        with pytest.raises(KgqaError, match="no precomputed embedding"):
            emb.embed("unknown text")

    def test_inconsistent_dimension_rejected(self, tmp_path):
        self._write(
            tmp_path / "emb.jsonl",
            [
                {"text_hash": "h1", "tokens": ["a"], "vectors": [[1.0, 0.0]]},
                {"text_hash": "h2", "tokens": ["b"], "vectors": [[1.0, 0.0, 0.0]]},
            ],
        )
        with pytest.raises(KgqaError, match="dimension"):
            PrecomputedEmbedder.from_jsonl(tmp_path / "emb.jsonl")

    def test_non_unit_vector_rejected(self, tmp_path):
        self._write(
            tmp_path / "emb.jsonl",
            [{"text_hash": "h1", "tokens": ["a"], "vectors": [[2.0, 0.0]]}],
        )
        with pytest.raises(KgqaError, match="non-unit"):
            PrecomputedEmbedder.from_jsonl(tmp_path / "emb.jsonl")

    def test_empty_file_rejected(self, tmp_path):
        (tmp_path / "emb.jsonl").write_text("")
        with pytest.raises(KgqaError, match="no embedding rows"):
            PrecomputedEmbedder.from_jsonl(tmp_path / "emb.jsonl")
