"""Synthetic alignment pairs in the standard file layout.

KG2 is an id-permuted copy of KG1 with an optional fraction of its triples
dropped or rewired, and the reference links hold the true permutation.
Entity names on the two sides share no tokens and the emitted word vectors
are independent draws, so a model can only align through structure and the
seed pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class SynthSummary:
    out_dir: Path
    n_entities: int
    n_relations: int
    n_triples_kg1: int
    n_triples_kg2: int
    dim: int


def _unique_triples(n: int, n_rel: int, n_triples: int,
                    rng: np.random.Generator) -> list[tuple[int, int, int]]:
    triples: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    # a relation-cycling chain keeps the graph connected and, once the chain
    # is at least n_rel long, every relation populated
    for i in range(min(n_triples, n - 1)):
        t = (i, i % n_rel, i + 1)
        triples.append(t)
        seen.add(t)
    # Zipf-weighted objects give the graph a few hub entities, mirroring the
    # heavy-tailed degree profile of real KGs; uniform-endpoint graphs carry
    # far weaker structural signal than anything alignment models see in
    # practice
    tail_w = 1.0 / np.arange(1, n + 1, dtype=np.float64)
    tail_w /= tail_w.sum()
    while len(triples) < n_triples:
        h = int(rng.integers(0, n))
        t = int(rng.choice(n, p=tail_w))
        if h == t:
            continue
        cand = (h, int(rng.integers(0, n_rel)), t)
        if cand in seen:
            continue
        triples.append(cand)
        seen.add(cand)
    return triples


def _apply_noise(triples: list[tuple[int, int, int]], n: int, lo: int, noise: float,
                 rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """Drop or rewire a `noise` fraction; ids live in [lo, lo + n)."""
    if noise == 0.0:
        return list(triples)
    m = int(round(noise * len(triples)))
    victims = set(rng.choice(len(triples), size=m, replace=False).tolist())
    out = []
    for pos, (h, r, t) in enumerate(triples):
        if pos not in victims:
            out.append((h, r, t))
            continue
        if rng.random() < 0.5:
            continue  # dropped
        new_t = lo + int(rng.integers(0, n))
        if new_t != h:
            out.append((h, r, new_t))
    return out


def gen_synth(n_entities: int, n_relations: int, n_triples: int, noise: float,
              seed: int, out_dir, dim: int = 64) -> SynthSummary:
    """Write ent_ids_1/2, triples_1/2, ref_ent_ids, and vectors.txt."""
    if min(n_entities, n_relations, n_triples, dim) <= 0:
        raise ValueError("sizes must be positive")
    if not 0.0 <= noise < 1.0:
        raise ValueError("noise must be in [0, 1)")
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    n = n_entities
    kg1 = _unique_triples(n, n_relations, n_triples, rng)
    perm = rng.permutation(n)
    kg2 = [(n + int(perm[h]), r, n + int(perm[t])) for h, r, t in kg1]
    kg2 = _apply_noise(kg2, n, n, noise, rng)

    with open(out_dir / "ent_ids_1", "w") as fh:
        for i in range(n):
            fh.write(f"{i}\thttp://synth.example/resource/A{i}\n")
    with open(out_dir / "ent_ids_2", "w") as fh:
        for j in range(n):
            fh.write(f"{n + j}\thttp://synth.example/resource/B{j}\n")
    with open(out_dir / "triples_1", "w") as fh:
        for h, r, t in kg1:
            fh.write(f"{h}\t{r}\t{t}\n")
    with open(out_dir / "triples_2", "w") as fh:
        for h, r, t in kg2:
            fh.write(f"{h}\t{r}\t{t}\n")
    with open(out_dir / "ref_ent_ids", "w") as fh:
        for i in range(n):
            fh.write(f"{i}\t{n + int(perm[i])}\n")
    # Name vectors sit around a shared centroid with per-name scatter twice
    # the centroid scale, the anisotropy real word-vector spaces show.  Each
    # name's offset is an independent draw, so names identify nothing and
    # alignment signal can only come from structure plus the seed pairs.
    mu = rng.normal(0.0, 0.3, size=dim)
    with open(out_dir / "vectors.txt", "w") as fh:
        for side, count in (("a", n), ("b", n)):
            for i in range(count):
                vec = mu + rng.normal(0.0, 0.6, size=dim)
                fh.write(f"{side}{i} " + " ".join(f"{v:.6f}" for v in vec) + "\n")

    return SynthSummary(out_dir=out_dir, n_entities=n, n_relations=n_relations,
                        n_triples_kg1=len(kg1), n_triples_kg2=len(kg2), dim=dim)
