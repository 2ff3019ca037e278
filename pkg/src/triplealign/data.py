"""Knowledge-graph pair loading and preprocessing.

Handles the tab-separated directory layout used by the cross-lingual
alignment benchmarks: ``ent_ids_<side>`` (id<TAB>uri), ``triples_<side>``
(h<TAB>r<TAB>t) and ``ref_ent_ids`` (id1<TAB>id2).  Entity and relation ids
from the files are remapped to dense 0-based ids per side, so downstream
code can index arrays directly.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import unquote

import numpy as np


class KGLoadError(Exception):
    """A dataset file is missing or unreadable."""


class KGValidationError(ValueError):
    """File contents violate the format contract (bad ids, duplicates)."""


_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def tokenize_name(uri: str) -> list[str]:
    """Split the final URI path segment into lowercase alphanumeric tokens."""
    segment = unquote(uri.rstrip("/").rsplit("/", 1)[-1])
    return [t for t in _NON_ALNUM.split(segment.lower()) if t]


@dataclass(frozen=True)
class KnowledgeGraph:
    """One side of a KG pair with dense entity/relation ids.

    ``triples`` holds deduplicated (head, relation, tail) rows indexing into
    the dense id spaces.  ``entity_source_ids`` maps dense id -> id used in
    the files, so alignment links can be translated between sides.
    """

    entity_uris: tuple[str, ...]
    entity_source_ids: np.ndarray
    relation_source_ids: np.ndarray
    triples: np.ndarray

    @property
    def n_entities(self) -> int:
        return len(self.entity_uris)

    @property
    def relation_count(self) -> int:
        return len(self.relation_source_ids)

    @property
    def entity_names(self) -> list[str]:
        return [" ".join(tokenize_name(u)) for u in self.entity_uris]

    def local_entity_id(self, source_id: int) -> int:
        idx = int(np.searchsorted(self.entity_source_ids, source_id))
        if idx >= len(self.entity_source_ids) or self.entity_source_ids[idx] != source_id:
            raise KGValidationError(f"unknown entity id {source_id}")
        return idx


@dataclass(frozen=True)
class CooMatrix:
    """Minimal COO sparse matrix used for the normalized adjacency."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    shape: tuple[int, int]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.values.dtype)
        out[self.rows, self.cols] = self.values
        return out

    def to_torch(self, dtype=None, device="cpu"):
        import torch

        indices = torch.from_numpy(np.stack([self.rows, self.cols]).astype(np.int64))
        values = torch.from_numpy(self.values)
        mat = torch.sparse_coo_tensor(indices, values, self.shape, device=device,
                                      check_invariants=True)
        if dtype is not None:
            mat = mat.to(dtype)
        return mat.coalesce()


@dataclass(frozen=True)
class ExpandedGraph:
    """Graph after adding reverse and self relations.

    For every base triple (h, r, t) the expanded set contains (h, r, t) and
    (t, r + k, h); every entity e carries (e, 2k, e).  The set is
    deduplicated, so a base self-loop contributes each edge once.
    """

    base: KnowledgeGraph
    expanded_relation_count: int
    expanded_triples: np.ndarray
    norm_adjacency: CooMatrix

    @property
    def n_entities(self) -> int:
        return self.base.n_entities


@dataclass(frozen=True)
class SeedSet:
    """Train/test split of the alignment links, ids local to each side."""

    train_pairs: np.ndarray
    test_pairs: np.ndarray
    ratio: float


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Per-entity input embeddings, one row per dense entity id."""

    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise KGValidationError("embedding matrix contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise KGLoadError(f"missing file: {path}")
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def load_kg(dir_path, side: int) -> KnowledgeGraph:
    """Load one side of a KG pair from ``ent_ids_<side>``/``triples_<side>``."""
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    dir_path = Path(dir_path)
    ent_lines = _read_lines(dir_path / f"ent_ids_{side}")
    tri_lines = _read_lines(dir_path / f"triples_{side}")

    source_ids = []
    uris = []
    for lineno, line in enumerate(ent_lines, start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise KGValidationError(f"ent_ids_{side} line {lineno}: expected 'id<TAB>uri', got {line!r}")
        source_ids.append(int(parts[0]))
        uris.append(parts[1])
    if not source_ids:
        raise KGValidationError(f"ent_ids_{side}: no entities")
    order = np.argsort(np.asarray(source_ids, dtype=np.int64), kind="stable")
    ent_source = np.asarray(source_ids, dtype=np.int64)[order]
    if len(np.unique(ent_source)) != len(ent_source):
        raise KGValidationError(f"ent_ids_{side}: duplicate entity ids")
    ent_uris = tuple(uris[i] for i in order)
    ent_map = {int(s): i for i, s in enumerate(ent_source)}

    raw_triples = []
    rel_ids = set()
    for lineno, line in enumerate(tri_lines, start=1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise KGValidationError(f"triples_{side} line {lineno}: expected 'h<TAB>r<TAB>t', got {line!r}")
        h, r, t = (int(p) for p in parts)
        if h not in ent_map:
            raise KGValidationError(f"triples_{side} line {lineno}: unknown head entity id {h}")
        if t not in ent_map:
            raise KGValidationError(f"triples_{side} line {lineno}: unknown tail entity id {t}")
        raw_triples.append((h, r, t))
        rel_ids.add(r)

    rel_source = np.asarray(sorted(rel_ids), dtype=np.int64)
    rel_map = {int(s): i for i, s in enumerate(rel_source)}
    seen = set()
    rows = []
    for h, r, t in raw_triples:
        key = (ent_map[h], rel_map[r], ent_map[t])
        if key not in seen:
            seen.add(key)
            rows.append(key)
    triples = np.asarray(sorted(rows), dtype=np.int64).reshape(-1, 3)
    return KnowledgeGraph(
        entity_uris=ent_uris,
        entity_source_ids=ent_source,
        relation_source_ids=rel_source,
        triples=triples,
    )


def normalized_adjacency(edges: np.ndarray, n: int) -> CooMatrix:
    """Symmetric degree normalization of a binary adjacency.

    ``edges`` is an (m, 2) array of (i, j) pairs; duplicates collapse to a
    single binary entry.  Entry (i, j) of the result is
    1 / sqrt(deg(i) * deg(j)) where deg counts distinct neighbors in the
    given edge set.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise KGValidationError(f"edge references id outside [0, {n})")
    uniq = np.unique(edges, axis=0) if edges.size else edges.reshape(0, 2)
    deg = np.zeros(n, dtype=np.float64)
    np.add.at(deg, uniq[:, 0], 1.0)
    inv_sqrt = np.zeros(n, dtype=np.float64)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    values = inv_sqrt[uniq[:, 0]] * inv_sqrt[uniq[:, 1]]
    return CooMatrix(rows=uniq[:, 0], cols=uniq[:, 1], values=values, shape=(n, n))


def expand_relations(kg: KnowledgeGraph) -> ExpandedGraph:
    """Add reverse relations (r + k) and the self relation (2k).

    The expanded triple set is deduplicated, then the normalized adjacency
    is built over its (head, tail) pairs.  Reverse edges make the adjacency
    symmetric; self-relation edges put ones on the diagonal.
    """
    if isinstance(kg, ExpandedGraph):
        raise TypeError("graph is already expanded")
    k = kg.relation_count
    n = kg.n_entities
    expanded = set()
    for h, r, t in kg.triples:
        expanded.add((int(h), int(r), int(t)))
        expanded.add((int(t), int(r) + k, int(h)))
    for e in range(n):
        expanded.add((e, 2 * k, e))
    triples = np.asarray(sorted(expanded), dtype=np.int64)
    adjacency = normalized_adjacency(triples[:, [0, 2]], n)
    return ExpandedGraph(
        base=kg,
        expanded_relation_count=2 * k + 1,
        expanded_triples=triples,
        norm_adjacency=adjacency,
    )


def load_seeds(path, ratio: float, rng_seed: int, *, kg1: KnowledgeGraph | None = None,
               kg2: KnowledgeGraph | None = None) -> SeedSet:
    """Read alignment links and split them into train/test deterministically.

    Links are shuffled with ``rng_seed``; the first floor(ratio * L) become
    the train pairs.  When the KGs are given, file ids are remapped to each
    side's dense ids.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    lines = _read_lines(Path(path))
    pairs = []
    seen_lines = set()
    for lineno, line in enumerate(lines, start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise KGValidationError(f"{path} line {lineno}: expected 'id1<TAB>id2', got {line!r}")
        key = (int(parts[0]), int(parts[1]))
        if key in seen_lines:
            raise KGValidationError(f"{path} line {lineno}: duplicate link {key}")
        seen_lines.add(key)
        pairs.append(key)
    links = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    for col, side in ((0, 1), (1, 2)):
        if len(np.unique(links[:, col])) != len(links):
            raise KGValidationError(f"{path}: an entity on side {side} appears in more than one link")
    if kg1 is not None:
        links[:, 0] = [kg1.local_entity_id(s) for s in links[:, 0]]
    if kg2 is not None:
        links[:, 1] = [kg2.local_entity_id(s) for s in links[:, 1]]

    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(len(links))
    n_train = int(np.floor(ratio * len(links)))
    shuffled = links[perm]
    return SeedSet(
        train_pairs=np.ascontiguousarray(shuffled[:n_train]),
        test_pairs=np.ascontiguousarray(shuffled[n_train:]),
        ratio=ratio,
    )


def _fallback_vector(token: str, rng_seed: int, dim: int, scale: float) -> np.ndarray:
    rng = np.random.default_rng((rng_seed, zlib.crc32(token.encode("utf-8"))))
    return rng.normal(0.0, scale, dim)


def load_word_vectors(path, dim: int) -> dict[str, np.ndarray]:
    """Parse a ``token f1 ... f_dim`` text file into a token -> vector map."""
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(_read_lines(Path(path)), start=1):
        parts = line.split()
        if len(parts) - 1 != dim:
            raise KGValidationError(
                f"{path} line {lineno}: expected {dim} values, got {len(parts) - 1}")
        vectors[parts[0]] = np.asarray(parts[1:], dtype=np.float64)
    return vectors


def init_embeddings(kg: KnowledgeGraph, vectors_path, dim: int, rng_seed: int,
                    dtype=np.float32) -> EmbeddingMatrix:
    """Initialize entity embeddings as the mean of name-token vectors.

    Out-of-vocabulary tokens get a deterministic random vector seeded by
    (rng_seed, token) and scaled so its expected norm matches the mean norm
    of the in-vocabulary vectors.  Zero fallbacks are avoided on purpose:
    all-zero rows collapse downstream attention scores.
    """
    vectors = load_word_vectors(vectors_path, dim)
    if vectors:
        norms = np.linalg.norm(np.stack(list(vectors.values())), axis=1)
        mean_norm = float(norms.mean())
        if mean_norm <= 0.0:
            mean_norm = 1.0
    else:
        mean_norm = 1.0
    scale = mean_norm / np.sqrt(dim)

    out = np.empty((kg.n_entities, dim), dtype=np.float64)
    for i, uri in enumerate(kg.entity_uris):
        tokens = tokenize_name(uri)
        if not tokens:
            tokens = [uri.lower()]
        acc = np.zeros(dim, dtype=np.float64)
        for tok in tokens:
            vec = vectors.get(tok)
            if vec is None:
                vec = _fallback_vector(tok, rng_seed, dim, scale)
            acc += vec
        out[i] = acc / len(tokens)
    return EmbeddingMatrix(values=out.astype(dtype))
