"""Token-level embedders producing per-token unit vectors for MaxSim scoring.

Three implementations share one interface: a dependency-free hashed
character-trigram embedder (default), a loader for precomputed embeddings
(where a real contextual token encoder plugs in), and a test oracle that
maps chosen texts to identical matrices.
"""

from __future__ import annotations

import hashlib
import json
import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, KgqaError

_TOKEN = re.compile(r"\w+")


@dataclass(frozen=True)
class TokenMatrix:
    """Token strings paired with unit-norm vectors, one row per token."""

    tokens: tuple[str, ...]
    vectors: np.ndarray  # (n_tokens, dim) float32, C-contiguous

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise ValueError("TokenMatrix requires at least one token")
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError(
                f"vectors shape {self.vectors.shape} does not match {len(self.tokens)} tokens"
            )
        norms = np.linalg.norm(self.vectors, axis=1)
        bad = np.abs(norms - 1.0) > 1e-5
        if bad.any():
            raise ValueError(f"non-unit token vector at row {int(np.argmax(bad))}")

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation (underscores stay inside tokens)."""
    return _TOKEN.findall(text.lower())


class Embedder:
    """Deterministic text -> TokenMatrix mapping.

    Subclasses set `name` and `dimension`; the name is recorded in indexes
    and checked at query time.
    """

    name: str
    dimension: int

    def embed(self, text: str) -> TokenMatrix:
        raise NotImplementedError


class HashedTrigramEmbedder(Embedder):
    """Built-in model-free embedder.

    Each token's vector is the L2-normalized average of one-hot projections
    of its padded character trigrams (crc32 hashing into `dimension`
    buckets). Deterministic across runs and platforms.
    """

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ConfigurationError("embedder dimension must be >= 1")
        self.dimension = dimension
        self.name = f"trigram-d{dimension}"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is not None:
            return vec
        padded = f"^{token}$"
        acc = np.zeros(self.dimension, dtype=np.float64)
        n = len(padded) - 2
        for i in range(n):
            bucket = zlib.crc32(padded[i : i + 3].encode("utf-8")) % self.dimension
            acc[bucket] += 1.0
        acc /= n
        acc /= np.linalg.norm(acc)
        vec = acc.astype(np.float32)
        self._token_cache[token] = vec
        return vec

    def embed(self, text: str) -> TokenMatrix:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError(f"text has no tokens to embed: {text!r}")
        vectors = np.stack([self._token_vector(t) for t in tokens])
        return TokenMatrix(tuple(tokens), vectors)


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class PrecomputedEmbedder(Embedder):
    """Serves embeddings from a JSON-lines file of {text_hash, tokens, vectors}.

    text_hash is the sha256 hex digest of the UTF-8 text. Vectors are
    validated (consistent dimension, near-unit norm) and renormalized to
    absorb JSON round-off.
    """

    def __init__(self, entries: Mapping[str, TokenMatrix], dimension: int, name: str = "precomputed"):
        if dimension < 1:
            raise ConfigurationError("embedder dimension must be >= 1")
        self._entries = dict(entries)
        self.dimension = dimension
        self.name = name

    @classmethod
    def from_jsonl(cls, path: str | Path, name: str = "precomputed") -> "PrecomputedEmbedder":
        entries: dict[str, TokenMatrix] = {}
        dimension: int | None = None
        with open(path, encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    text_hash = row["text_hash"]
                    tokens = tuple(row["tokens"])
                    vectors = np.asarray(row["vectors"], dtype=np.float64)
                except (KeyError, TypeError, ValueError) as exc:
                    raise KgqaError(f"{path}: bad embedding row at line {line_number}: {exc}") from exc
                if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
                    raise KgqaError(f"{path}: vector/token shape mismatch at line {line_number}")
                if dimension is None:
                    dimension = int(vectors.shape[1])
                elif vectors.shape[1] != dimension:
                    raise KgqaError(
                        f"{path}: dimension {vectors.shape[1]} at line {line_number}, expected {dimension}"
                    )
                norms = np.linalg.norm(vectors, axis=1)
                if np.any(np.abs(norms - 1.0) > 1e-3):
                    raise KgqaError(f"{path}: non-unit vector at line {line_number}")
                vectors = (vectors / norms[:, None]).astype(np.float32)
                entries[text_hash] = TokenMatrix(tokens, vectors)
        if dimension is None:
            raise KgqaError(f"{path}: no embedding rows")
        return cls(entries, dimension, name=name)

    def embed(self, text: str) -> TokenMatrix:
        tm = self._entries.get(text_sha256(text))
        if tm is None:
            raise KgqaError(f"no precomputed embedding for text: {text[:80]!r}")
        return tm


class OracleEmbedder(Embedder):
    """Test embedder: texts aliased to the same key get identical matrices.

    Every key maps to a single deterministic pseudo-random unit vector, so a
    query aliased to a document's text scores maximally against exactly that
    document.
    """

    def __init__(self, aliases: Mapping[str, str] | None = None, dimension: int = 64):
        if dimension < 1:
            raise ConfigurationError("embedder dimension must be >= 1")
        self.aliases = dict(aliases or {})
        self.dimension = dimension
        self.name = f"oracle-d{dimension}"

    def embed(self, text: str) -> TokenMatrix:
        key = self.aliases.get(text, text)
        seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dimension)
        vec /= np.linalg.norm(vec)
        return TokenMatrix(("<oracle>",), vec.astype(np.float32)[None, :])
