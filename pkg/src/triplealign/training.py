"""Margin-based alignment training with hard negatives and seed expansion.

Negatives substitute one side of a labeled pair with a uniform draw from
that entity's k nearest same-graph neighbors; the neighbor tables refresh
on a fixed epoch period.  The semi-supervised variant grows the training
pairs with mutual nearest neighbors over the entities not yet paired, and
never retracts an added pair.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch

from .data import ExpandedGraph, SeedSet
from .model import AlignmentModel, ModelConfig, SideBatch
from .neighbors import l1_argmin, nearest_neighbors

CHECKPOINT_MAGIC = "triplealign-checkpoint-v1"


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; the message names the epoch."""


@dataclass
class TrainConfig:
    epochs: int = 60
    lr: float = 1e-3
    margin: float = 3.0
    neg_k: int = 5
    semi: bool = False
    expansion_period: int = 5   # epochs between table refreshes / expansions
    train_inputs: bool = False  # also optimize the input embedding matrices
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.expansion_period < 1:
            raise ValueError("expansion_period must be >= 1")
        if self.neg_k < 1:
            raise ValueError("neg_k must be >= 1")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")


@dataclass
class AlignmentState:
    """Mutable training-pair set plus the expansion history.

    ``added`` logs (epoch, e1, e2, distance) per expanded pair; test pairs
    ride along untouched so downstream artifacts can rank the same split.
    """

    train_pairs: np.ndarray                    # (m, 2) int64 local ids
    test_pairs: np.ndarray | None = None
    added: list = field(default_factory=list)  # (epoch, e1, e2, distance)

    @property
    def n_pairs(self) -> int:
        return self.train_pairs.shape[0]

    def paired_entities(self, side: int) -> np.ndarray:
        return np.unique(self.train_pairs[:, side])


@dataclass
class TrainResult:
    model: AlignmentModel
    state: AlignmentState
    losses: list
    emb1: np.ndarray
    emb2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray


def l1_distance(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return torch.abs(a - b).sum(dim=1)


def margin_loss(pos: torch.Tensor, neg: torch.Tensor, margin: float) -> torch.Tensor:
    return torch.clamp(pos - neg + margin, min=0.0).sum()


def sample_negatives(pairs: np.ndarray, table1: np.ndarray, table2: np.ndarray,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One corrupted entity per pair per direction.

    Returns (neg_e1, neg_e2): neg_e2[i] replaces pairs[i, 1] with a uniform
    choice among its nearest neighbors, and symmetrically for neg_e1.
    """
    m = pairs.shape[0]
    pick1 = rng.integers(0, table1.shape[1], size=m)
    pick2 = rng.integers(0, table2.shape[1], size=m)
    neg_e1 = table1[pairs[:, 0], pick1]
    neg_e2 = table2[pairs[:, 1], pick2]
    return neg_e1, neg_e2


def mutual_nearest(emb1: np.ndarray, emb2: np.ndarray, pool1: np.ndarray,
                   pool2: np.ndarray) -> np.ndarray:
    """Mutually nearest candidate pairs between two pools, (m, 2) int64.

    A pair qualifies when each member is the other's closest candidate;
    argmin tie-breaking keeps the lowest id because pools are ascending.
    """
    pool1 = np.asarray(pool1, dtype=np.int64)
    pool2 = np.asarray(pool2, dtype=np.int64)
    if pool1.size == 0 or pool2.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    to2 = l1_argmin(emb1[pool1], emb2[pool2])   # positions within pool2
    to1 = l1_argmin(emb2[pool2], emb1[pool1])   # positions within pool1
    rows = np.arange(pool1.size)
    mutual = to1[to2] == rows
    return np.stack([pool1[mutual], pool2[to2[mutual]]], axis=1)


def expand_seeds(state: AlignmentState, emb1: np.ndarray, emb2: np.ndarray,
                 n1: int, n2: int, epoch: int) -> np.ndarray:
    """Grow the training pairs with mutual nearest unpaired entities.

    Uses only embedding geometry, never reference labels.  Returns the
    pairs added at this call; each is logged with its L1 distance.
    """
    pool1 = np.setdiff1d(np.arange(n1, dtype=np.int64), state.paired_entities(0))
    pool2 = np.setdiff1d(np.arange(n2, dtype=np.int64), state.paired_entities(1))
    new_pairs = mutual_nearest(emb1, emb2, pool1, pool2)
    if new_pairs.shape[0]:
        state.train_pairs = np.concatenate([state.train_pairs, new_pairs], axis=0)
        dists = np.abs(emb1[new_pairs[:, 0]] - emb2[new_pairs[:, 1]]).sum(axis=1)
        state.added.extend(
            (epoch, int(a), int(b), float(d)) for (a, b), d in zip(new_pairs, dists))
    return new_pairs


def _to_f64(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().to(torch.float64).numpy()


def train(graph1: ExpandedGraph, graph2: ExpandedGraph, x1: np.ndarray,
          x2: np.ndarray, seeds: SeedSet, model_cfg: ModelConfig,
          cfg: TrainConfig, log_dir: Path | None = None,
          model: AlignmentModel | None = None) -> TrainResult:
    """Run the full optimization and return the trained model and embeddings.

    Passing a prebuilt model reuses its parameters (useful for resuming);
    otherwise one is created from model_cfg with the configured seed.
    """
    device = cfg.device
    if model is None:
        model = AlignmentModel(model_cfg, seed=cfg.seed, device=device)
    batch1 = SideBatch.from_graph(graph1, x1, device=device)
    batch2 = SideBatch.from_graph(graph2, x2, device=device)
    rng = np.random.default_rng(cfg.seed)
    state = AlignmentState(
        train_pairs=np.asarray(seeds.train_pairs, dtype=np.int64).copy(),
        test_pairs=np.asarray(seeds.test_pairs, dtype=np.int64).copy())

    trainable = list(model.parameters())
    if cfg.train_inputs:
        in1 = torch.nn.Parameter(batch1.x0.clone())
        in2 = torch.nn.Parameter(batch2.x0.clone())
        trainable += [in1, in2]
    else:
        in1, in2 = batch1.x0, batch2.x0
    optimizer = torch.optim.Adam(trainable, lr=cfg.lr)

    loss_log = io.StringIO()
    loss_log.write("epoch,loss,train_pairs,added_pairs\n")
    expansion_lines = []
    losses = []
    table1 = table2 = None

    for epoch in range(cfg.epochs):
        added = 0
        # one cadence governs both: fresh tables at epoch 0, then expansion
        # plus refresh together every expansion_period epochs
        if epoch % cfg.expansion_period == 0:
            with torch.no_grad():
                cur1 = _to_f64(model.forward(batch1, in1))
                cur2 = _to_f64(model.forward(batch2, in2))
            if cfg.semi and epoch > 0:
                new_pairs = expand_seeds(state, cur1, cur2, batch1.n_entities,
                                         batch2.n_entities, epoch)
                added = new_pairs.shape[0]
                expansion_lines.append(
                    f"epoch={epoch} added={added} total={state.n_pairs}")
            table1 = nearest_neighbors(cur1, cfg.neg_k)
            table2 = nearest_neighbors(cur2, cfg.neg_k)

        pairs = state.train_pairs
        neg_e1, neg_e2 = sample_negatives(pairs, table1, table2, rng)
        e1 = torch.from_numpy(pairs[:, 0]).to(device)
        e2 = torch.from_numpy(pairs[:, 1]).to(device)
        ne1 = torch.from_numpy(neg_e1).to(device)
        ne2 = torch.from_numpy(neg_e2).to(device)

        optimizer.zero_grad()
        f1 = model.forward(batch1, in1)
        f2 = model.forward(batch2, in2)
        pos = l1_distance(f1[e1], f2[e2])
        loss = (margin_loss(pos, l1_distance(f1[e1], f2[ne2]), cfg.margin)
                + margin_loss(pos, l1_distance(f1[ne1], f2[e2]), cfg.margin))
        if not torch.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        loss.backward()
        optimizer.step()

        losses.append(float(loss.item()))
        loss_log.write(f"{epoch},{losses[-1]:.6f},{state.n_pairs},{added}\n")

    with torch.no_grad():
        emb1 = _to_f64(model.forward(batch1, in1))
        emb2 = _to_f64(model.forward(batch2, in2))
    x1_out = _to_f64(in1) if cfg.train_inputs else _to_f64(batch1.x0)
    x2_out = _to_f64(in2) if cfg.train_inputs else _to_f64(batch2.x0)

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        (log_dir / "loss.csv").write_text(loss_log.getvalue())
        if cfg.semi:
            (log_dir / "expansion.log").write_text(
                "\n".join(expansion_lines) + ("\n" if expansion_lines else ""))

    return TrainResult(model=model, state=state, losses=losses,
                       emb1=emb1, emb2=emb2, x1=x1_out, x2=x2_out)


def save_checkpoint(path, model: AlignmentModel, state: AlignmentState,
                    model_cfg: ModelConfig, train_cfg: TrainConfig,
                    x1: np.ndarray, x2: np.ndarray, epoch: int,
                    test_pairs: np.ndarray | None = None) -> None:
    """Serialize parameters, configs, inputs, and the pair state.

    Written through an open handle so the file keeps the exact name given.
    The test pairs ride along so a later evaluation ranks the same split.
    """
    if test_pairs is None:
        test_pairs = state.test_pairs
    arrays = {f"param/{k}": v for k, v in model.store.state_arrays().items()}
    arrays["state/train_pairs"] = state.train_pairs
    arrays["state/added"] = np.asarray(state.added, dtype=np.float64).reshape(-1, 4)
    arrays["state/test_pairs"] = (np.empty((0, 2), dtype=np.int64)
                                  if test_pairs is None else np.asarray(test_pairs))
    arrays["inputs/x1"] = x1
    arrays["inputs/x2"] = x2
    meta = {
        "magic": CHECKPOINT_MAGIC,
        "epoch": epoch,
        "model_cfg": asdict(model_cfg),
        "train_cfg": asdict(train_cfg),
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


@dataclass
class Checkpoint:
    model: AlignmentModel
    state: AlignmentState
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    x1: np.ndarray
    x2: np.ndarray
    epoch: int
    test_pairs: np.ndarray


def load_checkpoint(path) -> Checkpoint:
    with np.load(path) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        if meta.get("magic") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a recognized checkpoint")
        model_cfg = ModelConfig(**meta["model_cfg"])
        train_cfg = TrainConfig(**meta["train_cfg"])
        params = {k[len("param/"):]: z[k] for k in z.files if k.startswith("param/")}
        test_pairs = z["state/test_pairs"].copy()
        state = AlignmentState(train_pairs=z["state/train_pairs"].copy(),
                               test_pairs=test_pairs)
        state.added = [(int(r[0]), int(r[1]), int(r[2]), float(r[3]))
                       for r in z["state/added"]]
        x1 = z["inputs/x1"].copy()
        x2 = z["inputs/x2"].copy()
    model = AlignmentModel(model_cfg, seed=train_cfg.seed, device=train_cfg.device)
    model.store.load_arrays(params)
    return Checkpoint(model=model, state=state, model_cfg=model_cfg,
                      train_cfg=train_cfg, x1=x1, x2=x2,
                      epoch=meta["epoch"], test_pairs=test_pairs)
