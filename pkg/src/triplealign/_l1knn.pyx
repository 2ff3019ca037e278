# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""L1 nearest-neighbor kernels over dense float64 matrices.

Hot loops behind negative sampling, mutual-nearest-neighbor seed expansion,
and rank evaluation.  All ties resolve to the lowest corpus index;  results
must match the numpy fallback exactly, so distances accumulate feature by
feature in the same order.

Rows that cannot matter are abandoned early: partial L1 sums only grow, so
once the running sum exceeds the caller's bound the row is done.  The check
runs once per block of features, keeping the branch out of the innermost
loop.  On matched embeddings (the actual workload) the surviving bound is
tiny and most rows die at the first check.
"""

import numpy as np

from libc.math cimport fabs, INFINITY

# features accumulated between prune checks
cdef enum:
    PRUNE_BLOCK = 16


cdef inline double _row_l1(const double *q, const double *c, Py_ssize_t d,
                           double bound) noexcept nogil:
    """Left-to-right L1 distance, abandoned once the partial sum exceeds
    bound.  The abandoned value is only guaranteed to stay above bound;
    callers must treat any return > bound as "too far"."""
    cdef double acc = 0.0
    cdef Py_ssize_t b, ff, base = 0
    # constant trip count so the block body unrolls
    for b in range(d // PRUNE_BLOCK):
        for ff in range(base, base + PRUNE_BLOCK):
            acc += fabs(q[ff] - c[ff])
        base += PRUNE_BLOCK
        if acc > bound:
            return acc
    for ff in range(base, d):
        acc += fabs(q[ff] - c[ff])
    return acc


def l1_topk(double[:, ::1] queries, double[:, ::1] corpus, Py_ssize_t k):
    """k smallest L1 distances per query, ascending, lowest index on ties.

    Returns (indices, distances) of shape (n_queries, k).
    """
    cdef Py_ssize_t nq = queries.shape[0]
    cdef Py_ssize_t n = corpus.shape[0]
    cdef Py_ssize_t d = queries.shape[1]
    if corpus.shape[1] != d:
        raise ValueError("query/corpus feature dims differ")
    if k > n:
        k = n
    if k <= 0:
        raise ValueError("k must be positive")
    idx_arr = np.empty((nq, k), dtype=np.int64)
    dist_arr = np.empty((nq, k), dtype=np.float64)
    cdef long long[:, ::1] iv = idx_arr
    cdef double[:, ::1] dv = dist_arr
    cdef const double *qrow
    cdef Py_ssize_t i, j, m, p
    cdef double acc, worst
    with nogil:
        for i in range(nq):
            qrow = &queries[i, 0]
            m = 0
            worst = INFINITY
            for j in range(n):
                acc = _row_l1(qrow, &corpus[j, 0], d, worst)
                if acc >= worst:
                    continue
                # insertion keeps the buffer sorted by (distance, index);
                # the new index is the largest seen, so it lands after equals
                if m < k:
                    p = m
                    m += 1
                else:
                    p = k - 1
                while p > 0 and dv[i, p - 1] > acc:
                    dv[i, p] = dv[i, p - 1]
                    iv[i, p] = iv[i, p - 1]
                    p -= 1
                dv[i, p] = acc
                iv[i, p] = j
                if m == k:
                    worst = dv[i, k - 1]
    return idx_arr, dist_arr


def l1_argmin(double[:, ::1] queries, double[:, ::1] corpus):
    """Index of the closest corpus row per query, lowest index on ties."""
    cdef Py_ssize_t nq = queries.shape[0]
    cdef Py_ssize_t n = corpus.shape[0]
    cdef Py_ssize_t d = queries.shape[1]
    if corpus.shape[1] != d:
        raise ValueError("query/corpus feature dims differ")
    if n == 0:
        raise ValueError("empty corpus")
    out = np.empty(nq, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef const double *qrow
    cdef Py_ssize_t i, j
    cdef double acc, best
    cdef long long best_j
    with nogil:
        for i in range(nq):
            qrow = &queries[i, 0]
            best = INFINITY
            best_j = 0
            for j in range(n):
                acc = _row_l1(qrow, &corpus[j, 0], d, best)
                if acc < best:
                    best = acc
                    best_j = j
            ov[i] = best_j
    return out


def l1_rank_of(double[:, ::1] queries, double[:, ::1] corpus, long long[::1] gold):
    """Rank of corpus row gold[i] among all corpus rows for query i.

    Rank is 1 plus the number of strictly closer rows plus the number of
    equally distant rows with a lower index.
    """
    cdef Py_ssize_t nq = queries.shape[0]
    cdef Py_ssize_t n = corpus.shape[0]
    cdef Py_ssize_t d = queries.shape[1]
    if corpus.shape[1] != d:
        raise ValueError("query/corpus feature dims differ")
    if gold.shape[0] != nq:
        raise ValueError("gold length != number of queries")
    out = np.empty(nq, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef const double *qrow
    cdef Py_ssize_t i, j
    cdef long long g, rank
    cdef double acc, gd
    for i in range(nq):
        g = gold[i]
        if g < 0 or g >= n:
            raise ValueError("gold index out of range")
    with nogil:
        for i in range(nq):
            qrow = &queries[i, 0]
            g = gold[i]
            gd = _row_l1(qrow, &corpus[g, 0], d, INFINITY)
            rank = 1
            for j in range(n):
                # abandoned rows return > gd and can never tie, so the
                # j < g tie check below only sees completed distances
                acc = _row_l1(qrow, &corpus[j, 0], d, gd)
                if acc > gd:
                    continue
                if acc < gd or j < g:
                    rank += 1
            ov[i] = rank
    return out
