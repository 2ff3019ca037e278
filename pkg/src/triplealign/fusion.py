"""Ontology-space features and their fusion with semantic triples.

Entity vectors are mapped into a compact ontology space; per-relation means
of the mapped (head, tail) pairs act as latent type signatures.  A second
attention pass lets the semantic and ontology views of each triple weight
one another before both are merged into the final triple representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .correlation import LEAKY_SLOPE, semantic_triples
from .encoder import EncoderConfig
from .indexing import TripleIndex
from .params import ParameterStore
from .segments import segment_mean, segment_softmax, segment_sum


@dataclass
class EnsembleTriples:
    """Final triple matrix with the intermediate views kept for inspection."""

    triples: torch.Tensor          # (n_triples, d_r + 2*d_o)
    semantic: torch.Tensor         # S, (n_triples, d_r)
    ontology: torch.Tensor | None  # O, (n_triples, d_r); None when disabled
    rel_signature: torch.Tensor    # per-relation ontology pair mean, (R, 2*d_o)

    @property
    def width(self) -> int:
        return self.triples.shape[1]


def register_fusion_params(store: ParameterStore, cfg: EncoderConfig) -> None:
    d_e, d_r, d_o = cfg.d_e, cfg.d_r, cfg.d_o
    store.register_weight("onto.map.weight", (d_e, d_o))
    store.register_bias("onto.map.bias", d_o)
    # Relation-level projection consumes the concatenated pair mean, so 2*d_o in.
    store.register_weight("onto.rel.weight", (2 * d_o, d_r))
    store.register_bias("onto.rel.bias", d_r)
    store.register_weight("onto.triple.weight", (2 * d_o + d_r, d_r))
    store.register_bias("onto.triple.bias", d_r)
    store.register_attention("onto.attn_sem", 2 * d_r)
    store.register_attention("onto.attn_onto", 2 * d_r)


def to_ontology_space(x: torch.Tensor, params: ParameterStore) -> torch.Tensor:
    return torch.tanh(x @ params["onto.map.weight"] + params["onto.map.bias"])


def ontology_relation(index: TripleIndex, x_onto: torch.Tensor,
                      params: ParameterStore) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-relation pair-mean signature and its projection to triple width."""
    rel_ids = index.torch_column("relations")
    pairs = torch.cat([x_onto[index.torch_column("heads")],
                       x_onto[index.torch_column("tails")]], dim=1)
    signature = segment_mean(pairs, rel_ids, index.n_relations)
    projected = signature @ params["onto.rel.weight"] + params["onto.rel.bias"]
    return signature, projected


def ontology_triple(index: TripleIndex, x_onto: torch.Tensor,
                    rel_projected: torch.Tensor, params: ParameterStore) -> torch.Tensor:
    rel_ids = index.torch_column("relations")
    cat = torch.cat([x_onto[index.torch_column("heads")],
                     rel_projected[rel_ids],
                     x_onto[index.torch_column("tails")]], dim=1)
    return torch.relu(cat @ params["onto.triple.weight"] + params["onto.triple.bias"])


def modal_co_attention(index: TripleIndex, sem: torch.Tensor, onto: torch.Tensor,
                       params: ParameterStore) -> tuple[torch.Tensor, torch.Tensor]:
    """Cross-view attention between semantic and ontology triples.

    Each direction scores the concatenation of both views, normalizes over
    the triples of one relation, and aggregates the view being attended to
    into a per-relation summary.  Returns (sem_from_onto, onto_from_sem),
    both (n_relations, d_r).
    """
    rel_ids = index.torch_column("relations")
    n_rel = index.n_relations
    score_sem = torch.nn.functional.leaky_relu(
        torch.cat([sem, onto], dim=1) @ params["onto.attn_sem"], LEAKY_SLOPE)
    alpha_sem = segment_softmax(score_sem, rel_ids, n_rel)
    onto_from_sem = torch.relu(segment_sum(alpha_sem.unsqueeze(1) * sem, rel_ids, n_rel))
    score_onto = torch.nn.functional.leaky_relu(
        torch.cat([onto, sem], dim=1) @ params["onto.attn_onto"], LEAKY_SLOPE)
    alpha_onto = segment_softmax(score_onto, rel_ids, n_rel)
    sem_from_onto = torch.relu(segment_sum(alpha_onto.unsqueeze(1) * onto, rel_ids, n_rel))
    return sem_from_onto, onto_from_sem


def ensemble_triple(index: TripleIndex, x: torch.Tensor, params: ParameterStore,
                    *, use_global: bool = True, use_ontology: bool = True) -> EnsembleTriples:
    """Fused triple representation of width d_r + 2*d_o.

    With the ontology view disabled the semantic part passes through and the
    ontology columns are zero, keeping downstream shapes unchanged.
    """
    rel_ids = index.torch_column("relations")
    sem = semantic_triples(index, x, params, use_global=use_global).combined
    x_onto = to_ontology_space(x, params)
    signature, rel_projected = ontology_relation(index, x_onto, params)
    if not use_ontology:
        pad = torch.zeros((sem.shape[0], signature.shape[1]), dtype=sem.dtype, device=sem.device)
        return EnsembleTriples(triples=torch.cat([sem, pad], dim=1), semantic=sem,
                               ontology=None, rel_signature=signature)
    onto = ontology_triple(index, x_onto, rel_projected, params)
    sem_from_onto, onto_from_sem = modal_co_attention(index, sem, onto, params)
    merged = sem + sem_from_onto[rel_ids] + onto_from_sem[rel_ids] + onto
    triples = torch.cat([merged, signature[rel_ids]], dim=1)
    return EnsembleTriples(triples=triples, semantic=sem, ontology=onto,
                           rel_signature=signature)
