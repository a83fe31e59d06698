#!/usr/bin/env python3
"""Compare the compiled MaxSim kernel against the numpy fallback.

Builds synthetic indexes at several sizes and times full-index query
scoring plus single-pair scoring on both backends.

Usage: python benchmarks/bench_kernels.py [--sizes 10000,100000,269482] [--queries 20]
"""

import argparse
import time

import numpy as np

from kgqa import kernels, synth
from kgqa.embedders import HashedTrigramEmbedder
from kgqa.index import build_index

try:
    from kgqa import _maxsim
except ImportError:
    _maxsim = None


def compiled_packed(q, packed, offsets):
    out = np.empty(len(offsets) - 1, dtype=np.float64)
    _maxsim.score_packed(np.ascontiguousarray(q, dtype=np.float32), packed, offsets, out)
    return out


def time_backend(fn, queries, packed, offsets, repeats=1):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        for q in queries:
            fn(q, packed, offsets)
        best = min(best, (time.perf_counter() - started) / len(queries))
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10000,100000,269482",
                        type=lambda s: [int(x) for x in s.split(",")])
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--dim", type=int, default=64)
    args = parser.parse_args()

    if _maxsim is None:
        print("compiled kernel not built (pip install -e . or python setup.py build_ext --inplace);")
        print("only the numpy fallback will be timed")

    print(f"{'triples':>10} {'tokens':>10} {'numpy ms/q':>12} {'compiled ms/q':>14} {'speedup':>8}")
    for size in args.sizes:
        kg = synth.synthetic_kg(size, seed=7, entity_pool=max(100, size // 7))
        emb = HashedTrigramEmbedder(args.dim)
        index = build_index(kg, emb)
        questions = synth.synthetic_questions(kg, args.queries, seed=3)
        query_matrices = [emb.embed(q).vectors for q in questions]

        numpy_s = time_backend(kernels.score_packed_numpy, query_matrices, index.packed, index.offsets)
        row = f"{size:>10} {index.packed.shape[0]:>10} {numpy_s * 1000:>12.1f}"
        if _maxsim is not None:
            compiled_s = time_backend(compiled_packed, query_matrices, index.packed, index.offsets)
            row += f" {compiled_s * 1000:>14.1f} {numpy_s / compiled_s:>8.2f}x"
        print(row)

    # single-pair scoring (the composable API, double accumulation)
    rng = np.random.default_rng(0)
    q = rng.standard_normal((8, args.dim)).astype(np.float32)
    t = rng.standard_normal((6, args.dim)).astype(np.float32)
    n = 20000
    started = time.perf_counter()
    for _ in range(n):
        kernels.maxsim_pair_numpy(q, t)
    numpy_us = (time.perf_counter() - started) / n * 1e6
    line = f"\nsingle pair (8x6 tokens, d={args.dim}): numpy {numpy_us:.1f} us"
    if _maxsim is not None:
        started = time.perf_counter()
        for _ in range(n):
            _maxsim.maxsim_pair(q, t)
        compiled_us = (time.perf_counter() - started) / n * 1e6
        line += f", compiled {compiled_us:.1f} us ({numpy_us / compiled_us:.1f}x)"
    print(line)


if __name__ == "__main__":
    main()
