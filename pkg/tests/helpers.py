"""Toy-instance builders and the finite-difference harness shared by tests."""

from __future__ import annotations

import numpy as np
import torch

from triplealign import AlignmentModel, ModelConfig, SideBatch
from triplealign.data import (KnowledgeGraph, SeedSet, expand_relations,
                              normalized_adjacency)
from triplealign.indexing import TripleIndex

import oracles
from oracles import expand_triples_ref


def random_triples(n: int, k: int, m: int, rng) -> np.ndarray:
    """m unique triples over n entities and k relations, all relations used."""
    trips = {(i % n, i % k, (i + 1) % n) for i in range(max(k, 2))}
    while len(trips) < m:
        h = int(rng.integers(0, n))
        t = int(rng.integers(0, n))
        if h == t:
            continue
        trips.add((h, int(rng.integers(0, k)), t))
    return np.asarray(sorted(trips), dtype=np.int64)


class Toy:
    """A small aligned-side instance with model, params, and dense mirrors."""

    def __init__(self, seed: int = 0, n: int = 9, k: int = 3, m: int = 14,
                 d_e: int = 6, d_r: int = 4, d_o: int = 3, depth: int = 2,
                 cycle_mode: int = 2, gate_bias: float = 0.0,
                 dtype=torch.float64, x_scale: float = 0.8, **model_kw):
        rng = np.random.default_rng(seed)
        self.n, self.k = n, k
        self.base_triples = random_triples(n, k, m, rng)
        self.expanded = expand_triples_ref(self.base_triples, n, k)
        self.index = TripleIndex(triples=self.expanded, n_entities=n,
                                 n_relations=2 * k + 1)
        self.coo = normalized_adjacency(self.expanded[:, [0, 2]], n)
        self.adj_dense = np.zeros((n, n))
        self.adj_dense[self.coo.rows, self.coo.cols] = self.coo.values
        self.cfg = ModelConfig(d_e=d_e, d_r=d_r, d_o=d_o, depth=depth,
                               cycle_mode=cycle_mode, gate_bias=gate_bias,
                               **model_kw)
        self.model = AlignmentModel(self.cfg, seed=seed, dtype=dtype)
        self.params = self.model.store.state_arrays()
        self.x0 = rng.normal(0.0, x_scale, size=(n, d_e))
        self.xt = torch.from_numpy(self.x0).to(dtype)
        self.adj_t = self.coo.to_torch(dtype=dtype)
        self.batch = SideBatch(index=self.index, norm_adjacency=self.adj_t,
                               x0=self.xt)

    def encoded_ref(self):
        from oracles import encode_ref
        gws = [self.params[f"encoder.gate{l}.weight"] for l in range(self.cfg.depth)]
        gbs = [self.params[f"encoder.gate{l}.bias"] for l in range(self.cfg.depth)]
        return encode_ref(self.x0, self.adj_dense, gws, gbs)


def forward_ref(toy: Toy) -> np.ndarray:
    """Whole pipeline composed from the dense references, honoring ablations."""
    from triplealign.decoder import CYCLE_MODES

    cfg, p, triples = toy.cfg, toy.params, toy.expanded
    rel = triples[:, 1]
    enc = toy.encoded_ref()

    x_rel = oracles.latent_relation_ref(enc, triples,
                                        p["triple.latent_rel.weight"],
                                        p["triple.latent_rel.bias"])
    sem = sum(
        oracles.interaction_attention_ref(
            role, triples, enc, x_rel, p[f"triple.{role}.self_proj"],
            p[f"triple.{role}.ctx_proj"], p[f"triple.{role}.attn"],
            toy.index.n_relations)
        for role in ("head", "rel", "tail"))
    if cfg.use_global_relation:
        _, s_global = oracles.global_relation_ref(
            triples, enc, p["triple.global_rel.weight"],
            p["triple.global_rel.bias"], p["triple.pair.weight"],
            p["triple.pair.bias"], toy.index.n_relations)
        sem = sem + s_global

    x_onto = oracles.ontology_map_ref(enc, p["onto.map.weight"], p["onto.map.bias"])
    signature, projected = oracles.ontology_relation_ref(
        triples, x_onto, p["onto.rel.weight"], p["onto.rel.bias"],
        toy.index.n_relations)
    if cfg.use_ontology:
        onto = oracles.ontology_triple_ref(triples, x_onto, projected,
                                           p["onto.triple.weight"],
                                           p["onto.triple.bias"])
        sem_from_onto, onto_from_sem = oracles.co_attention_ref(
            triples, sem, onto, p["onto.attn_sem"], p["onto.attn_onto"],
            toy.index.n_relations)
        merged = sem + sem_from_onto[rel] + onto_from_sem[rel] + onto
        t_repr = np.concatenate([merged, signature[rel]], axis=1)
    else:
        t_repr = np.concatenate(
            [sem, np.zeros((sem.shape[0], signature.shape[1]))], axis=1)

    x = enc
    for role in CYCLE_MODES[cfg.effective_cycle_mode]:
        x = oracles.role_attention_ref(role, triples, t_repr, x,
                                       p[f"decoder.{role}.proj"],
                                       p[f"decoder.{role}.attn"], toy.n)
    edges = np.unique(triples[:, [0, 2]], axis=0)
    return oracles.gat_ref(edges, x, p["decoder.gat.weight"],
                           p["decoder.gat.attn"], toy.n)


def make_kg(n: int, k: int, m: int, seed: int) -> KnowledgeGraph:
    rng = np.random.default_rng(seed)
    return KnowledgeGraph(
        entity_uris=tuple(f"http://x/e{i}" for i in range(n)),
        entity_source_ids=np.arange(n, dtype=np.int64),
        relation_source_ids=np.arange(k, dtype=np.int64),
        triples=random_triples(n, k, m, rng),
    )


def make_pair(n: int = 20, k: int = 3, m: int = 40, seed: int = 0,
              dim: int = 8, train_frac: float = 0.5):
    """Two isomorphic expanded graphs, inputs, and a seed split.

    Side 2 is side 1 with entities relabeled by a random permutation, so
    (i, perm[i]) are the gold links.  Returns (g1, g2, x1, x2, seeds, perm).
    """
    rng = np.random.default_rng(seed)
    kg1 = make_kg(n, k, m, seed)
    perm = rng.permutation(n)
    t2 = kg1.triples.copy()
    t2[:, 0] = perm[t2[:, 0]]
    t2[:, 2] = perm[t2[:, 2]]
    kg2 = KnowledgeGraph(
        entity_uris=tuple(f"http://y/e{j}" for j in range(n)),
        entity_source_ids=np.arange(n, dtype=np.int64),
        relation_source_ids=np.arange(k, dtype=np.int64),
        triples=np.asarray(sorted(map(tuple, t2.tolist())), dtype=np.int64),
    )
    links = np.stack([np.arange(n, dtype=np.int64), perm], axis=1)
    links = links[rng.permutation(n)]
    n_train = max(1, int(train_frac * n))
    seeds = SeedSet(train_pairs=links[:n_train].copy(),
                    test_pairs=links[n_train:].copy(),
                    ratio=train_frac)
    x1 = rng.normal(0.0, 0.5, size=(n, dim))
    x2 = rng.normal(0.0, 0.5, size=(n, dim))
    return expand_relations(kg1), expand_relations(kg2), x1, x2, seeds, perm


def fd_excess(fd: float, ag: float, rtol: float = 1e-4,
              atol: float = 1e-8) -> float:
    """How far an (fd, autograd) pair exceeds the mixed tolerance; <= 1 passes.

    Central differences in float64 carry cancellation noise of about
    eps * |loss| / (2h); with loss O(10) and h = 1e-6 that is ~1e-9, so
    gradient entries below ~1e-5 cannot be certified to any relative
    tolerance by finite differences alone.  The absolute floor covers that
    regime (with margin) while the relative term governs everywhere else,
    the same formulation torch.autograd.gradcheck uses.
    """
    return abs(fd - ag) / (atol + rtol * max(abs(fd), abs(ag)))


def finite_difference_check(model: AlignmentModel, loss_fn, names=None,
                            h: float = 1e-6, max_entries: int | None = None,
                            rng=None):
    """Central-difference check of d(loss)/d(param) for every named parameter.

    loss_fn() must rebuild the graph and return a scalar tensor each call so
    parameter perturbations take effect.  Returns {name: worst excess ratio}
    per fd_excess; every value <= 1 means every entry agreed within
    tolerance.  With max_entries set, that many randomly chosen entries are
    checked per parameter instead of all of them.
    """
    store = model.store
    names = list(names) if names is not None else store.names()
    loss = loss_fn()
    grads = torch.autograd.grad(loss, [store[n] for n in names], allow_unused=False)
    worst = {}
    for name, grad in zip(names, grads):
        param = store[name]
        flat_g = grad.detach().reshape(-1)
        n_entries = flat_g.shape[0]
        if max_entries is not None and n_entries > max_entries:
            idx = (rng or np.random.default_rng(0)).choice(
                n_entries, size=max_entries, replace=False)
        else:
            idx = range(n_entries)
        err = 0.0
        for i in idx:
            with torch.no_grad():
                orig = param.reshape(-1)[i].item()
                param.reshape(-1)[i] = orig + h
            up = loss_fn().item()
            with torch.no_grad():
                param.reshape(-1)[i] = orig - h
            down = loss_fn().item()
            with torch.no_grad():
                param.reshape(-1)[i] = orig
            err = max(err, fd_excess((up - down) / (2.0 * h), flat_g[i].item()))
        worst[name] = err
    return worst
