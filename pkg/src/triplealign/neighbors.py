"""L1 neighbor search with a compiled kernel and a numpy fallback.

The compiled module is built at install time when Cython is available;
setting TRIPLEALIGN_NO_EXT=1 before import forces the numpy path.  Both
backends implement identical contracts (see _l1knn_np), so everything here
is argument validation plus the self-exclusion logic for neighbor tables.
"""

from __future__ import annotations

import os

import numpy as np

from . import _l1knn_np

if os.environ.get("TRIPLEALIGN_NO_EXT") == "1":
    _impl = _l1knn_np
    backend_name = "numpy"
else:
    try:
        from . import _l1knn as _impl  # type: ignore[attr-defined]
        backend_name = "cython"
    except ImportError:
        _impl = _l1knn_np
        backend_name = "numpy"


def _as_matrix(a) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def l1_topk(queries, corpus, k: int):
    """(indices, distances) of the k closest corpus rows per query row.

    Ascending by distance, ties broken toward the lowest corpus index.
    k is clipped to the corpus size.
    """
    return _impl.l1_topk(_as_matrix(queries), _as_matrix(corpus), int(k))


def l1_argmin(queries, corpus) -> np.ndarray:
    return np.asarray(_impl.l1_argmin(_as_matrix(queries), _as_matrix(corpus)))


def l1_rank_of(queries, corpus, gold) -> np.ndarray:
    """1-based rank of corpus row gold[i] for query i.

    Strictly closer rows and equally distant rows with lower index rank ahead.
    """
    gold = np.ascontiguousarray(np.asarray(gold, dtype=np.int64))
    return np.asarray(_impl.l1_rank_of(_as_matrix(queries), _as_matrix(corpus), gold))


def nearest_neighbors(x, k: int) -> np.ndarray:
    """Per-row indices of the k nearest other rows of x, (n, k) int64.

    k is clipped to n - 1.  The row itself is excluded; when duplicates push
    it out of the top k+1 entirely, the surviving entries are equally near,
    so the first k are kept.
    """
    x = _as_matrix(x)
    n = x.shape[0]
    k = min(int(k), n - 1)
    if k <= 0:
        return np.empty((n, 0), dtype=np.int64)
    idx, _ = l1_topk(x, x, k + 1)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        row = idx[i]
        out[i] = row[row != i][:k]
    return out
