"""MaxSim scoring kernels with backend selection.

The compiled extension (kgqa._maxsim, built from _maxsim.pyx) is used when
importable; otherwise a vectorized numpy implementation takes over. Set
KGQA_PURE_PYTHON=1 to force the numpy path (the benchmark uses this to
compare backends).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _maxsim as _compiled
except ImportError:
    _compiled = None

if os.environ.get("KGQA_PURE_PYTHON"):
    _compiled = None

#: Row budget per scoring block in the numpy path, keeps the similarity
#: matrix around tens of MB regardless of index size.
_BLOCK_TOKENS = 1 << 21


def backend_name() -> str:
    return "compiled" if _compiled is not None else "numpy"


def maxsim_pair_numpy(q: np.ndarray, t: np.ndarray) -> float:
    sim = q.astype(np.float64, copy=False) @ t.astype(np.float64, copy=False).T
    return float(sim.max(axis=1).sum())


def score_packed_numpy(q: np.ndarray, packed: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    n_entries = len(offsets) - 1
    out = np.empty(n_entries, dtype=np.float64)
    q32 = np.ascontiguousarray(q, dtype=np.float32)
    start_entry = 0
    while start_entry < n_entries:
        # grow the block one entry past the token budget so huge entries still fit
        end_entry = int(np.searchsorted(offsets, offsets[start_entry] + _BLOCK_TOKENS, side="left"))
        end_entry = min(max(end_entry, start_entry + 1), n_entries)
        lo, hi = int(offsets[start_entry]), int(offsets[end_entry])
        sim = q32 @ packed[lo:hi].T  # (n_query_tokens, block_tokens) float32
        seg_starts = (offsets[start_entry:end_entry] - lo).astype(np.intp)
        maxima = np.maximum.reduceat(sim, seg_starts, axis=1)
        out[start_entry:end_entry] = maxima.sum(axis=0, dtype=np.float64)
        start_entry = end_entry
    return out


def maxsim_pair(q: np.ndarray, t: np.ndarray) -> float:
    """Sum over query tokens of the max dot product against document tokens."""
    if _compiled is not None:
        return _compiled.maxsim_pair(
            np.ascontiguousarray(q, dtype=np.float32),
            np.ascontiguousarray(t, dtype=np.float32),
        )
    return maxsim_pair_numpy(q, t)


def score_packed(q: np.ndarray, packed: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Score one query matrix against every segment of a packed index.

    `packed` stacks all entry token vectors; segment e is rows
    [offsets[e], offsets[e+1]). Returns float64 scores, one per segment.
    """
    if _compiled is not None:
        out = np.empty(len(offsets) - 1, dtype=np.float64)
        _compiled.score_packed(
            np.ascontiguousarray(q, dtype=np.float32),
            packed,
            offsets,
            out,
        )
        return out
    return score_packed_numpy(q, packed, offsets)
