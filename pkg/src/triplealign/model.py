"""End-to-end alignment model over one knowledge-graph side.

Both graphs of an alignment task run through the same parameter set: shared
weights are what let entities from different graphs land in one comparable
space.  The forward pass is encode (structure) -> triple representations
(interaction + ontology fusion) -> decode (role attention + neighborhood).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .data import ExpandedGraph
from .decoder import (CYCLE_MODES, DEFAULT_CYCLE_MODE, DecodedEmbeddings,
                      decode_entities, register_decoder_params)
from .encoder import EncoderConfig, encode_topology, register_encoder_params
from .fusion import EnsembleTriples, ensemble_triple, register_fusion_params
from .correlation import register_correlation_params
from .indexing import TripleIndex
from .params import ParameterStore


@dataclass(frozen=True)
class ModelConfig:
    d_e: int = 300
    d_r: int = 100
    d_o: int = 100
    depth: int = 2
    cycle_mode: int = DEFAULT_CYCLE_MODE
    gate_bias: float = 0.0             # initial highway-gate openness
    use_global_relation: bool = True   # off: drop the per-relation global feature
    use_ontology: bool = True          # off: ontology columns zeroed
    use_cycle: bool = True             # off: single head/tail pass regardless of mode

    def __post_init__(self):
        if self.cycle_mode not in CYCLE_MODES:
            raise ValueError(f"cycle_mode must be one of {sorted(CYCLE_MODES)}")

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(depth=self.depth, d_e=self.d_e, d_r=self.d_r,
                             d_o=self.d_o, gate_bias=self.gate_bias)

    @property
    def effective_cycle_mode(self) -> int:
        return self.cycle_mode if self.use_cycle else 1

    @property
    def triple_width(self) -> int:
        return self.d_r + 2 * self.d_o


@dataclass
class SideBatch:
    """One graph prepared for the forward pass."""

    index: TripleIndex
    norm_adjacency: torch.Tensor  # sparse (n, n)
    x0: torch.Tensor              # (n, d_e) input embeddings

    @classmethod
    def from_graph(cls, graph: ExpandedGraph, x0, dtype=torch.float32,
                   device: str = "cpu") -> "SideBatch":
        if isinstance(x0, np.ndarray):
            x0 = torch.from_numpy(x0)
        x0 = x0.to(dtype=dtype, device=device)
        if x0.shape[0] != graph.n_entities:
            raise ValueError(
                f"embedding rows ({x0.shape[0]}) != entities ({graph.n_entities})")
        adj = graph.norm_adjacency.to_torch(dtype=dtype, device=device)
        return cls(index=TripleIndex.from_graph(graph), norm_adjacency=adj, x0=x0)

    @property
    def n_entities(self) -> int:
        return self.index.n_entities


@dataclass
class ForwardTrace:
    encoded: torch.Tensor
    ensemble: EnsembleTriples
    decoded: DecodedEmbeddings


class AlignmentModel:
    """Holds the shared parameters and runs the per-graph forward pass."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=torch.float32,
                 device: str = "cpu"):
        self.cfg = cfg
        self.store = ParameterStore(seed=seed, dtype=dtype, device=device)
        enc_cfg = cfg.encoder
        register_encoder_params(self.store, enc_cfg)
        register_correlation_params(self.store, enc_cfg)
        register_fusion_params(self.store, enc_cfg)
        register_decoder_params(self.store, enc_cfg)

    def parameters(self):
        return self.store.parameters()

    def forward(self, batch: SideBatch, x: torch.Tensor | None = None,
                collect: bool = False) -> torch.Tensor | ForwardTrace:
        """Final entity embeddings for one graph.

        `x` overrides the batch's stored inputs, which is how a trainable
        input matrix is threaded through without the model owning it.
        """
        cfg = self.cfg
        x_in = batch.x0 if x is None else x
        encoded = encode_topology(x_in, batch.norm_adjacency, cfg.encoder, self.store)
        ensemble = ensemble_triple(
            batch.index, encoded, self.store,
            use_global=cfg.use_global_relation, use_ontology=cfg.use_ontology)
        decoded = decode_entities(
            batch.index, ensemble.triples, encoded, self.store,
            mode=cfg.effective_cycle_mode, collect=collect)
        if collect:
            return ForwardTrace(encoded=encoded, ensemble=ensemble, decoded=decoded)
        return decoded.final

    def embed_pair(self, batch1: SideBatch, batch2: SideBatch,
                   x1: torch.Tensor | None = None, x2: torch.Tensor | None = None):
        return self.forward(batch1, x1), self.forward(batch2, x2)
