"""Entity decoding from triple representations.

Entities re-absorb the triples they participate in through role-specific
attention (as head, as tail), applied in an alternating cycle so that
information picked up in one role feeds the scores of the next.  A final
neighborhood pass re-aggregates entity vectors over the expanded adjacency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .correlation import LEAKY_SLOPE
from .encoder import EncoderConfig
from .indexing import TripleIndex
from .params import ParameterStore
from .segments import segment_softmax, segment_sum

# Role sequences per cycle mode.  Repeated roles share one parameter set, so
# deeper cycles add passes, not parameters.
CYCLE_MODES: dict[int, tuple[str, ...]] = {
    1: ("head", "tail"),
    2: ("head", "tail", "head"),
    3: ("head", "tail", "head", "tail"),
}

DEFAULT_CYCLE_MODE = 2


@dataclass
class DecodedEmbeddings:
    final: torch.Tensor
    stages: list = field(default_factory=list)  # (role, tensor) pairs when traced


def register_decoder_params(store: ParameterStore, cfg: EncoderConfig) -> None:
    triple_width = cfg.d_r + 2 * cfg.d_o
    for role in ("head", "tail"):
        store.register_weight(f"decoder.{role}.proj", (triple_width, cfg.d_e))
        store.register_attention(f"decoder.{role}.attn", 2 * cfg.d_e)
    store.register_weight("decoder.gat.weight", (cfg.d_e, cfg.d_e))
    store.register_attention("decoder.gat.attn", 2 * cfg.d_e)


def role_attention(role: str, index: TripleIndex, triples: torch.Tensor,
                   x: torch.Tensor, params: ParameterStore) -> torch.Tensor:
    """Update entities from the triples where they hold the given role.

    Each incident triple is projected to entity width, scored against the
    entity's current vector, and the softmax-weighted sum is added through
    a ReLU residual.  Entities with no triples in this role pass through.
    """
    if role not in ("head", "tail"):
        raise ValueError(f"unknown decoder role {role!r}")
    seg = index.torch_column("heads" if role == "head" else "tails")
    proj = triples @ params[f"decoder.{role}.proj"]
    scores = torch.cat([proj, x[seg]], dim=1) @ params[f"decoder.{role}.attn"]
    alpha = segment_softmax(
        torch.nn.functional.leaky_relu(scores, LEAKY_SLOPE), seg, index.n_entities)
    agg = segment_sum(alpha.unsqueeze(1) * proj, seg, index.n_entities)
    return x + torch.relu(agg)


def cycle_co_enhance(index: TripleIndex, triples: torch.Tensor, x: torch.Tensor,
                     params: ParameterStore, mode: int = DEFAULT_CYCLE_MODE,
                     trace: list | None = None) -> torch.Tensor:
    if mode not in CYCLE_MODES:
        raise ValueError(f"cycle mode must be one of {sorted(CYCLE_MODES)}, got {mode}")
    for role in CYCLE_MODES[mode]:
        x = role_attention(role, index, triples, x, params)
        if trace is not None:
            trace.append((role, x))
    return x


def neighbor_reaggregate(index: TripleIndex, x: torch.Tensor,
                         params: ParameterStore) -> torch.Tensor:
    """Single-head attention over expanded-graph neighbors, with residual.

    The edge set already contains reverse and self edges, so every entity
    attends over its in/out neighbors and itself.
    """
    dst, src = index.torch_edges()
    wx = x @ params["decoder.gat.weight"]
    scores = torch.cat([wx[dst], wx[src]], dim=1) @ params["decoder.gat.attn"]
    alpha = segment_softmax(
        torch.nn.functional.leaky_relu(scores, LEAKY_SLOPE), dst, index.n_entities)
    agg = segment_sum(alpha.unsqueeze(1) * wx[src], dst, index.n_entities)
    return x + torch.relu(agg)


def decode_entities(index: TripleIndex, triples: torch.Tensor, x: torch.Tensor,
                    params: ParameterStore, mode: int = DEFAULT_CYCLE_MODE,
                    collect: bool = False) -> DecodedEmbeddings:
    trace: list | None = [] if collect else None
    enhanced = cycle_co_enhance(index, triples, x, params, mode=mode, trace=trace)
    final = neighbor_reaggregate(index, enhanced, params)
    return DecodedEmbeddings(final=final, stages=trace or [])
