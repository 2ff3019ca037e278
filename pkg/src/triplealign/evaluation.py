"""Alignment quality metrics over held-out entity pairs.

Candidates are restricted to the test-side entities, ranked by L1 distance.
A gold entity's rank counts every strictly closer candidate plus every
equally distant candidate with a lower id, so ranking is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .neighbors import l1_rank_of

DEFAULT_KS = (1, 10)


@dataclass
class DirectionMetrics:
    hits: dict          # k -> percentage in [0, 100]
    mrr: float
    n: int

    def as_dict(self) -> dict:
        out = {f"hits@{k}": self.hits[k] for k in sorted(self.hits)}
        out["mrr"] = self.mrr
        out["n"] = self.n
        return out


@dataclass
class MetricsReport:
    forward: DirectionMetrics    # kg1 -> kg2
    backward: DirectionMetrics   # kg2 -> kg1
    average: DirectionMetrics

    def as_dict(self) -> dict:
        return {
            "kg1_to_kg2": self.forward.as_dict(),
            "kg2_to_kg1": self.backward.as_dict(),
            "average": self.average.as_dict(),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.as_dict(), indent=indent)


def rank_gold(queries: np.ndarray, candidates: np.ndarray,
              gold_positions: np.ndarray) -> np.ndarray:
    """1-based ranks of the gold candidates; see module docstring for ties."""
    return l1_rank_of(queries, candidates, gold_positions)


def _direction(emb_q: np.ndarray, emb_c: np.ndarray, pairs_q: np.ndarray,
               pairs_c: np.ndarray, ks) -> DirectionMetrics:
    cand = np.unique(pairs_c)               # ascending candidate ids
    gold = np.searchsorted(cand, pairs_c)   # position of each gold entity
    ranks = rank_gold(emb_q[pairs_q], emb_c[cand], gold)
    hits = {int(k): float(100.0 * np.count_nonzero(ranks <= k) / ranks.size)
            for k in ks}
    mrr = float(np.mean(1.0 / ranks))
    return DirectionMetrics(hits=hits, mrr=mrr, n=int(ranks.size))


def compute_metrics(emb1: np.ndarray, emb2: np.ndarray, test_pairs: np.ndarray,
                    ks=DEFAULT_KS) -> MetricsReport:
    """Hits@k and MRR in both directions plus their average.

    test_pairs holds (kg1 id, kg2 id) rows; candidates for each direction
    are only the test entities of the target side.
    """
    test_pairs = np.asarray(test_pairs, dtype=np.int64)
    if test_pairs.ndim != 2 or test_pairs.shape[1] != 2 or test_pairs.shape[0] == 0:
        raise ValueError("test_pairs must be a nonempty (n, 2) array")
    fwd = _direction(emb1, emb2, test_pairs[:, 0], test_pairs[:, 1], ks)
    bwd = _direction(emb2, emb1, test_pairs[:, 1], test_pairs[:, 0], ks)
    avg = DirectionMetrics(
        hits={k: (fwd.hits[k] + bwd.hits[k]) / 2.0 for k in fwd.hits},
        mrr=(fwd.mrr + bwd.mrr) / 2.0,
        n=fwd.n,
    )
    return MetricsReport(forward=fwd, backward=bwd, average=avg)
