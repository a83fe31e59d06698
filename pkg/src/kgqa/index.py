"""Late-interaction triple index: build, persist, and answer top-k queries.

Scoring is exhaustive (every entry is scored per query) so rankings are
exact; ties break by ascending triple id for reproducible traces.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from . import kernels
from .embedders import Embedder, TokenMatrix
from .errors import ConfigurationError, DimensionMismatchError, IndexFormatError
from .kg import KnowledgeGraph, verbalize

_MAGIC = b"KGQIDX"
_VERSION = 1


@dataclass(frozen=True)
class ScoredTriple:
    triple_id: int
    score: float


class TripleIndex:
    """One embedded entry per verbalized triple, stored as a packed matrix.

    `packed` stacks every entry's token vectors (float32, unit rows);
    entry i covers rows offsets[i]:offsets[i+1] and belongs to triple
    ids[i]. Immutable after build; queries may run concurrently.
    """

    def __init__(self, embedder_name: str, dimension: int, ids: np.ndarray,
                 packed: np.ndarray, offsets: np.ndarray):
        self.embedder_name = embedder_name
        self.dimension = dimension
        self.ids = ids
        self.packed = packed
        self.offsets = offsets

    def __len__(self) -> int:
        return len(self.ids)

    def entry(self, position: int) -> tuple[int, np.ndarray]:
        """(triple_id, token-vector matrix) for the entry at `position`."""
        lo, hi = int(self.offsets[position]), int(self.offsets[position + 1])
        return int(self.ids[position]), self.packed[lo:hi]


def build_index(kg: KnowledgeGraph, emb: Embedder) -> TripleIndex:
    """Embed every verbalized triple, in id order."""
    if getattr(emb, "dimension", 0) < 1:
        raise ConfigurationError("embedder dimension must be >= 1")
    matrices: list[np.ndarray] = []
    offsets = np.empty(len(kg.triples) + 1, dtype=np.int64)
    offsets[0] = 0
    for t in kg.triples:
        tm = emb.embed(verbalize(t).text)
        if tm.dimension != emb.dimension:
            raise ConfigurationError(
                f"embedder {emb.name} produced dimension {tm.dimension}, declared {emb.dimension}"
            )
        matrices.append(tm.vectors)
        offsets[t.id + 1] = offsets[t.id] + tm.vectors.shape[0]
    packed = np.ascontiguousarray(np.concatenate(matrices, axis=0), dtype=np.float32)
    ids = np.arange(len(kg.triples), dtype=np.int64)
    return TripleIndex(emb.name, emb.dimension, ids, packed, offsets)


def maxsim_score(q: TokenMatrix, t: TokenMatrix) -> float:
    """Late-interaction score: per query token, the max dot product over
    document tokens, summed over query tokens."""
    if q.dimension != t.dimension:
        raise DimensionMismatchError(q.dimension, t.dimension)
    return kernels.maxsim_pair(q.vectors, t.vectors)


def top_k(index: TripleIndex, emb: Embedder, query: str, k: int) -> list[ScoredTriple]:
    """The min(k, |index|) best-scoring triples, scores non-increasing,
    ties broken by ascending triple id."""
    if emb.name != index.embedder_name:
        raise ConfigurationError(
            f"index was built with embedder {index.embedder_name!r}, queried with {emb.name!r}"
        )
    if k < 1:
        raise ValueError("k must be >= 1")
    q = emb.embed(query)
    if q.dimension != index.dimension:
        raise DimensionMismatchError(q.dimension, index.dimension)
    scores = kernels.score_packed(q.vectors, index.packed, index.offsets)
    n = len(index)
    kk = min(k, n)
    # exact selection: take everything tied with the k-th score, then order
    threshold = np.partition(scores, n - kk)[n - kk]
    candidates = np.flatnonzero(scores >= threshold)
    order = np.lexsort((index.ids[candidates], -scores[candidates]))
    chosen = candidates[order][:kk]
    return [ScoredTriple(int(index.ids[i]), float(scores[i])) for i in chosen]


def save_index(index: TripleIndex, path: str | Path) -> None:
    """Binary layout: magic, version, embedder name, dimension, entry count,
    then per entry (triple_id, token count, packed little-endian float32)."""
    with open(path, "wb") as fh:
        name = index.embedder_name.encode("utf-8")
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, len(name)))
        fh.write(name)
        fh.write(struct.pack("<IQ", index.dimension, len(index)))
        for i in range(len(index)):
            triple_id, matrix = index.entry(i)
            fh.write(struct.pack("<QI", triple_id, matrix.shape[0]))
            fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise IndexFormatError(f"truncated index file while reading {what}")
    return data


def load_index(path: str | Path) -> TripleIndex:
    with open(path, "rb") as fh:
        if _read_exact(fh, len(_MAGIC), "magic") != _MAGIC:
            raise IndexFormatError(f"{path}: not an index file")
        version, name_len = struct.unpack("<HI", _read_exact(fh, 6, "header"))
        if version != _VERSION:
            raise IndexFormatError(f"{path}: unsupported index version {version}")
        embedder_name = _read_exact(fh, name_len, "embedder name").decode("utf-8")
        dimension, count = struct.unpack("<IQ", _read_exact(fh, 12, "header"))
        ids = np.empty(count, dtype=np.int64)
        offsets = np.empty(count + 1, dtype=np.int64)
        offsets[0] = 0
        blocks: list[bytes] = []
        for i in range(count):
            triple_id, n_tokens = struct.unpack("<QI", _read_exact(fh, 12, f"entry {i} header"))
            if n_tokens < 1:
                raise IndexFormatError(f"{path}: entry {i} has no tokens")
            ids[i] = triple_id
            offsets[i + 1] = offsets[i] + n_tokens
            blocks.append(_read_exact(fh, 4 * n_tokens * dimension, f"entry {i} vectors"))
        if fh.read(1):
            raise IndexFormatError(f"{path}: trailing bytes after last entry")
    packed = np.frombuffer(b"".join(blocks), dtype="<f4").reshape(int(offsets[-1]), dimension)
    return TripleIndex(embedder_name, dimension, ids, np.ascontiguousarray(packed), offsets)
