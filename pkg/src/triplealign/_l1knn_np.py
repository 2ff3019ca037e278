"""Pure numpy/scipy port of the L1 nearest-neighbor kernels.

Same contracts as the compiled module: ascending (distance, index) order,
lowest corpus index on ties.  Distances come from scipy's cityblock cdist,
which accumulates features in the same order as the compiled loops, so the
two backends agree exactly.  Queries are processed in blocks to bound the
distance-matrix footprint.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

# ~64 MB of float64 distances against a 20k corpus per block.
_BLOCK_ROWS = 400


def _blocks(n: int):
    for start in range(0, n, _BLOCK_ROWS):
        yield start, min(start + _BLOCK_ROWS, n)


def l1_topk(queries: np.ndarray, corpus: np.ndarray, k: int):
    nq, n = queries.shape[0], corpus.shape[0]
    if corpus.shape[1] != queries.shape[1]:
        raise ValueError("query/corpus feature dims differ")
    k = min(k, n)
    if k <= 0:
        raise ValueError("k must be positive")
    idx_out = np.empty((nq, k), dtype=np.int64)
    dist_out = np.empty((nq, k), dtype=np.float64)
    for start, stop in _blocks(nq):
        dmat = cdist(queries[start:stop], corpus, metric="cityblock")
        for r in range(dmat.shape[0]):
            row = dmat[r]
            if k < n:
                # candidates at or below the kth value, then a stable sort so
                # equal distances keep ascending-index order
                thresh = np.partition(row, k - 1)[k - 1]
                cand = np.flatnonzero(row <= thresh)
            else:
                cand = np.arange(n)
            order = cand[np.argsort(row[cand], kind="stable")][:k]
            idx_out[start + r] = order
            dist_out[start + r] = row[order]
    return idx_out, dist_out


def l1_argmin(queries: np.ndarray, corpus: np.ndarray) -> np.ndarray:
    if corpus.shape[1] != queries.shape[1]:
        raise ValueError("query/corpus feature dims differ")
    if corpus.shape[0] == 0:
        raise ValueError("empty corpus")
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start, stop in _blocks(queries.shape[0]):
        dmat = cdist(queries[start:stop], corpus, metric="cityblock")
        out[start:stop] = dmat.argmin(axis=1)
    return out


def l1_rank_of(queries: np.ndarray, corpus: np.ndarray, gold: np.ndarray) -> np.ndarray:
    nq, n = queries.shape[0], corpus.shape[0]
    if corpus.shape[1] != queries.shape[1]:
        raise ValueError("query/corpus feature dims differ")
    if gold.shape[0] != nq:
        raise ValueError("gold length != number of queries")
    if nq and (gold.min() < 0 or gold.max() >= n):
        raise ValueError("gold index out of range")
    out = np.empty(nq, dtype=np.int64)
    col = np.arange(n)
    for start, stop in _blocks(nq):
        dmat = cdist(queries[start:stop], corpus, metric="cityblock")
        g = gold[start:stop]
        gd = dmat[np.arange(dmat.shape[0]), g]
        closer = (dmat < gd[:, None]).sum(axis=1)
        tied_lower = ((dmat == gd[:, None]) & (col[None, :] < g[:, None])).sum(axis=1)
        out[start:stop] = 1 + closer + tied_lower
    return out
