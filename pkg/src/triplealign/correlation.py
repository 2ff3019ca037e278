"""Per-triple semantic representations from element interactions.

A triple is treated as one unit: each element (head, relation slot, tail)
attends over its relation group with the ordered concatenation of the other
two elements as context, and a per-relation global feature averages the
(head, tail) pairs sharing a relation.  Attention weights are normalized
within the triples of one relation.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .encoder import EncoderConfig
from .indexing import TripleIndex
from .params import ParameterStore
from .segments import segment_mean, segment_softmax

LEAKY_SLOPE = 0.2

ROLES = ("head", "rel", "tail")


@dataclass
class SemanticTriples:
    """Interaction part (s_local), global part (s_global), and their sum."""

    s_local: torch.Tensor
    s_global: torch.Tensor | None
    combined: torch.Tensor


def register_correlation_params(store: ParameterStore, cfg: EncoderConfig) -> None:
    d_e, d_r = cfg.d_e, cfg.d_r
    store.register_weight("triple.latent_rel.weight", (2 * d_e, d_r))
    store.register_bias("triple.latent_rel.bias", d_r)
    # Context projections are sized by the actual concatenation each role sees.
    ctx_dims = {"head": d_r + d_e, "rel": 2 * d_e, "tail": d_e + d_r}
    self_dims = {"head": d_e, "rel": d_r, "tail": d_e}
    for role in ROLES:
        store.register_weight(f"triple.{role}.self_proj", (self_dims[role], d_r))
        store.register_weight(f"triple.{role}.ctx_proj", (ctx_dims[role], d_r))
        store.register_attention(f"triple.{role}.attn", 2 * d_r)
    store.register_weight("triple.global_rel.weight", (2 * d_e, d_r))
    store.register_bias("triple.global_rel.bias", d_r)
    store.register_weight("triple.pair.weight", (2 * d_e + d_r, d_r))
    store.register_bias("triple.pair.bias", d_r)


def latent_relation(x_heads: torch.Tensor, x_tails: torch.Tensor,
                    params: ParameterStore) -> torch.Tensor:
    """Latent relation vector of each triple from its entity pair."""
    cat = torch.cat([x_heads, x_tails], dim=1)
    return torch.relu(cat @ params["triple.latent_rel.weight"] + params["triple.latent_rel.bias"])


def _role_inputs(role: str, x_heads, x_tails, x_rel):
    if role == "head":
        return x_heads, torch.cat([x_rel, x_tails], dim=1)
    if role == "rel":
        return x_rel, torch.cat([x_heads, x_tails], dim=1)
    if role == "tail":
        return x_tails, torch.cat([x_heads, x_rel], dim=1)
    raise ValueError(f"unknown role {role!r}")


def interaction_attention(role: str, index: TripleIndex, x: torch.Tensor,
                          x_rel: torch.Tensor, params: ParameterStore) -> torch.Tensor:
    """One stage of the elementwise interaction attention.

    Scores concatenate the projected element with the projected context of
    the other two elements; weights are softmax-normalized over the triples
    sharing a relation, then applied to the element projection.
    """
    rel_ids = index.torch_column("relations")
    x_heads = x[index.torch_column("heads")]
    x_tails = x[index.torch_column("tails")]
    elem, ctx = _role_inputs(role, x_heads, x_tails, x_rel)
    elem_proj = elem @ params[f"triple.{role}.self_proj"]
    ctx_proj = ctx @ params[f"triple.{role}.ctx_proj"]
    scores = torch.cat([elem_proj, ctx_proj], dim=1) @ params[f"triple.{role}.attn"]
    alpha = segment_softmax(
        torch.nn.functional.leaky_relu(scores, LEAKY_SLOPE), rel_ids, index.n_relations)
    return torch.relu(alpha.unsqueeze(1) * elem_proj)


def global_relation_feature(index: TripleIndex, x: torch.Tensor,
                            params: ParameterStore) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-relation mean of (head, tail) pairs, then a per-triple feature.

    Returns the projected relation-level feature (one row per relation) and
    the per-triple combination of both entities with their relation feature.
    """
    rel_ids = index.torch_column("relations")
    x_heads = x[index.torch_column("heads")]
    x_tails = x[index.torch_column("tails")]
    pair_mean = segment_mean(torch.cat([x_heads, x_tails], dim=1), rel_ids, index.n_relations)
    rel_feature = pair_mean @ params["triple.global_rel.weight"] + params["triple.global_rel.bias"]
    per_triple = torch.cat([x_heads, rel_feature[rel_ids], x_tails], dim=1)
    s_global = torch.relu(per_triple @ params["triple.pair.weight"] + params["triple.pair.bias"])
    return rel_feature, s_global


def semantic_triples(index: TripleIndex, x: torch.Tensor, params: ParameterStore,
                     *, use_global: bool = True) -> SemanticTriples:
    """Ensemble semantic triple: interaction part plus optional global part."""
    x_rel = latent_relation(x[index.torch_column("heads")], x[index.torch_column("tails")], params)
    s_local = (interaction_attention("head", index, x, x_rel, params)
               + interaction_attention("rel", index, x, x_rel, params)
               + interaction_attention("tail", index, x, x_rel, params))
    if not use_global:
        return SemanticTriples(s_local=s_local, s_global=None, combined=s_local)
    _, s_global = global_relation_feature(index, x, params)
    return SemanticTriples(s_local=s_local, s_global=s_global, combined=s_local + s_global)
