# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled MaxSim kernels: sum over query tokens of the max dot product
against document tokens, for a single pair and for a packed index.

Dot products accumulate in 8 independent lanes so the C compiler can keep
the inner loop vectorized without reassociating a single serial reduction.
"""

from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _dot_f64(const float* a, const float* b, Py_ssize_t d) nogil:
    cdef double lane0 = 0.0, lane1 = 0.0, lane2 = 0.0, lane3 = 0.0
    cdef double lane4 = 0.0, lane5 = 0.0, lane6 = 0.0, lane7 = 0.0
    cdef Py_ssize_t k = 0
    while k + 8 <= d:
        lane0 += (<double> a[k]) * b[k]
        lane1 += (<double> a[k + 1]) * b[k + 1]
        lane2 += (<double> a[k + 2]) * b[k + 2]
        lane3 += (<double> a[k + 3]) * b[k + 3]
        lane4 += (<double> a[k + 4]) * b[k + 4]
        lane5 += (<double> a[k + 5]) * b[k + 5]
        lane6 += (<double> a[k + 6]) * b[k + 6]
        lane7 += (<double> a[k + 7]) * b[k + 7]
        k += 8
    cdef double tail = 0.0
    while k < d:
        tail += (<double> a[k]) * b[k]
        k += 1
    return ((lane0 + lane1) + (lane2 + lane3)) + ((lane4 + lane5) + (lane6 + lane7)) + tail


cdef inline float _dot_f32(const float* a, const float* b, Py_ssize_t d) nogil:
    cdef float lane0 = 0.0, lane1 = 0.0, lane2 = 0.0, lane3 = 0.0
    cdef float lane4 = 0.0, lane5 = 0.0, lane6 = 0.0, lane7 = 0.0
    cdef Py_ssize_t k = 0
    while k + 8 <= d:
        lane0 += a[k] * b[k]
        lane1 += a[k + 1] * b[k + 1]
        lane2 += a[k + 2] * b[k + 2]
        lane3 += a[k + 3] * b[k + 3]
        lane4 += a[k + 4] * b[k + 4]
        lane5 += a[k + 5] * b[k + 5]
        lane6 += a[k + 6] * b[k + 6]
        lane7 += a[k + 7] * b[k + 7]
        k += 8
    cdef float tail = 0.0
    while k < d:
        tail += a[k] * b[k]
        k += 1
    return ((lane0 + lane1) + (lane2 + lane3)) + ((lane4 + lane5) + (lane6 + lane7)) + tail


def maxsim_pair(const float[:, ::1] q, const float[:, ::1] t) -> float:
    """MaxSim score of one (query, document) token-matrix pair.

    Accumulates in double precision; agrees with a float64 nested-loop
    reference to well under 1e-9.
    """
    cdef Py_ssize_t nq = q.shape[0], nt = t.shape[0], d = q.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, best, total = 0.0
    with nogil:
        for i in range(nq):
            best = -1e308
            for j in range(nt):
                acc = _dot_f64(&q[i, 0], &t[j, 0], d)
                if acc > best:
                    best = acc
            total += best
    return total


def score_packed(const float[:, ::1] q,
                 const float[:, ::1] packed,
                 const long long[::1] offsets,
                 double[::1] out) -> None:
    """MaxSim scores of one query against every segment of a packed index.

    Segment e spans packed rows [offsets[e], offsets[e+1]); every segment
    must be non-empty. Scores are written to out[e]. Dot products use
    float32 accumulation, matching the numpy fallback's sgemm precision.
    """
    cdef Py_ssize_t n_entries = offsets.shape[0] - 1
    cdef Py_ssize_t nq = q.shape[0], d = q.shape[1]
    cdef Py_ssize_t e, i, j
    cdef long long j0, j1
    cdef float acc
    cdef double total
    cdef float* best = <float*> malloc(nq * sizeof(float))
    if best == NULL:
        raise MemoryError()
    try:
        with nogil:
            for e in range(n_entries):
                for i in range(nq):
                    best[i] = -3.4e38
                j0 = offsets[e]
                j1 = offsets[e + 1]
                for j in range(j0, j1):
                    for i in range(nq):
                        acc = _dot_f32(&q[i, 0], &packed[j, 0], d)
                        if acc > best[i]:
                            best[i] = acc
                total = 0.0
                for i in range(nq):
                    total += best[i]
                out[e] = total
    finally:
        free(best)
