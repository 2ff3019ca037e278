"""Topology encoder: degree-normalized propagation with highway gating.

Each layer smooths entity embeddings over the expanded adjacency and mixes
the result with the layer input through a learned sigmoid gate, keeping the
original signal reachable at any depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .params import ParameterStore


@dataclass(frozen=True)
class EncoderConfig:
    depth: int = 2
    d_e: int = 300
    d_r: int = 100
    d_o: int = 100
    # starting point of the highway gates: 0 mixes half and half, positive
    # values open the gates toward the propagated signal, which matters when
    # the inputs carry no alignment signal of their own
    gate_bias: float = 0.0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        for name in ("d_e", "d_r", "d_o"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def register_encoder_params(store: ParameterStore, cfg: EncoderConfig) -> None:
    for layer in range(cfg.depth):
        store.register_weight(f"encoder.gate{layer}.weight", (cfg.d_e, cfg.d_e))
        store.register_bias(f"encoder.gate{layer}.bias", cfg.d_e, fill=cfg.gate_bias)


def gcn_layer(x: torch.Tensor, norm_adj: torch.Tensor) -> torch.Tensor:
    """ReLU(norm_adj @ x) with a sparse adjacency."""
    if norm_adj.shape[1] != x.shape[0]:
        raise ValueError(f"adjacency {tuple(norm_adj.shape)} does not match input {tuple(x.shape)}")
    return torch.relu(torch.sparse.mm(norm_adj, x))


def highway(x_in: torch.Tensor, x_new: torch.Tensor, weight: torch.Tensor,
            bias: torch.Tensor) -> torch.Tensor:
    """Gate between layer input and layer output, elementwise."""
    if x_in.shape != x_new.shape:
        raise ValueError(f"shape mismatch: {tuple(x_in.shape)} vs {tuple(x_new.shape)}")
    gate = torch.sigmoid(x_in @ weight + bias)
    return gate * x_new + (1.0 - gate) * x_in


def encode_topology(x0: torch.Tensor, norm_adj: torch.Tensor, cfg: EncoderConfig,
                    params: ParameterStore) -> torch.Tensor:
    x = x0
    for layer in range(cfg.depth):
        propagated = gcn_layer(x, norm_adj)
        x = highway(x, propagated, params[f"encoder.gate{layer}.weight"],
                    params[f"encoder.gate{layer}.bias"])
    return x
