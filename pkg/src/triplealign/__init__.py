"""Cross-lingual knowledge-graph entity alignment.

Pipeline: load a KG pair, expand relations, encode structure with gated
graph convolutions, build triple-level representations fusing element
interactions with latent ontology signatures, decode entities back out
through role attention, and train on seed pairs with a margin objective.
Optionally the seed set grows itself from mutual nearest neighbors.
"""

from .config import ConfigError, RunConfig, from_file, from_text
from .data import (CooMatrix, EmbeddingMatrix, ExpandedGraph, KGLoadError,
                   KGValidationError, KnowledgeGraph, SeedSet, expand_relations,
                   init_embeddings, load_kg, load_seeds, normalized_adjacency,
                   tokenize_name)
from .evaluation import DirectionMetrics, MetricsReport, compute_metrics
from .indexing import TripleIndex
from .model import AlignmentModel, ModelConfig, SideBatch
from .neighbors import backend_name, l1_argmin, l1_rank_of, l1_topk, nearest_neighbors
from .synth import gen_synth
from .training import (AlignmentState, TrainConfig, TrainingDiverged, TrainResult,
                       expand_seeds, load_checkpoint, mutual_nearest,
                       save_checkpoint, train)

__version__ = "0.1.0"

__all__ = [
    "AlignmentModel", "AlignmentState", "ConfigError", "CooMatrix",
    "DirectionMetrics", "EmbeddingMatrix", "ExpandedGraph", "KGLoadError",
    "KGValidationError", "KnowledgeGraph", "MetricsReport", "ModelConfig",
    "RunConfig", "SeedSet", "SideBatch", "TrainConfig", "TrainResult",
    "TrainingDiverged", "TripleIndex", "backend_name", "compute_metrics",
    "expand_relations", "expand_seeds", "from_file", "from_text", "gen_synth",
    "init_embeddings", "l1_argmin", "l1_rank_of", "l1_topk", "load_checkpoint",
    "load_kg", "load_seeds", "mutual_nearest", "nearest_neighbors",
    "normalized_adjacency", "save_checkpoint", "tokenize_name", "train",
]
