"""Grouped views over the expanded triple set.

The attention stages normalize scores within the triples of one relation,
and the decoder within the triples incident to one entity, so the index
precomputes the column arrays those segmented reductions run over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import ExpandedGraph


@dataclass
class TripleIndex:
    """Column-oriented view of expanded triples plus grouping metadata."""

    triples: np.ndarray
    n_entities: int
    n_relations: int
    _torch_cols: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_graph(cls, graph: ExpandedGraph) -> "TripleIndex":
        return cls(
            triples=graph.expanded_triples,
            n_entities=graph.n_entities,
            n_relations=graph.expanded_relation_count,
        )

    @property
    def n_triples(self) -> int:
        return self.triples.shape[0]

    @property
    def heads(self) -> np.ndarray:
        return self.triples[:, 0]

    @property
    def relations(self) -> np.ndarray:
        return self.triples[:, 1]

    @property
    def tails(self) -> np.ndarray:
        return self.triples[:, 2]

    def triples_of_relation(self, r: int) -> np.ndarray:
        return self.triples[self.relations == r]

    def heads_of_relation(self, r: int) -> set[int]:
        return set(self.triples_of_relation(r)[:, 0].tolist())

    def tails_of_relation(self, r: int) -> set[int]:
        return set(self.triples_of_relation(r)[:, 2].tolist())

    def incident_as_head(self, e: int) -> np.ndarray:
        return np.flatnonzero(self.heads == e)

    def incident_as_tail(self, e: int) -> np.ndarray:
        return np.flatnonzero(self.tails == e)

    def torch_column(self, name: str):
        """Cached LongTensor view of a triple column ('heads'/'relations'/'tails')."""
        if name not in self._torch_cols:
            import torch

            col = {"heads": 0, "relations": 1, "tails": 2}[name]
            self._torch_cols[name] = torch.from_numpy(
                np.ascontiguousarray(self.triples[:, col]))
        return self._torch_cols[name]

    def torch_edges(self):
        """Deduplicated (dst, src) edge columns of the expanded graph.

        Reverse and self-loop triples are already present, so the unique
        (head, tail) pairs give each entity its full neighborhood plus a
        self edge.  Cached LongTensors, one per endpoint.
        """
        if "edge_dst" not in self._torch_cols:
            import torch

            pairs = np.unique(self.triples[:, [0, 2]], axis=0)
            self._torch_cols["edge_dst"] = torch.from_numpy(np.ascontiguousarray(pairs[:, 0]))
            self._torch_cols["edge_src"] = torch.from_numpy(np.ascontiguousarray(pairs[:, 1]))
        return self._torch_cols["edge_dst"], self._torch_cols["edge_src"]
