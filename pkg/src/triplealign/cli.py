"""Command-line pipeline: train, evaluate, sweep, and gen-synth.

Each run directory receives a canonical config snapshot, the checkpoint,
loss curve, and metrics, which together are enough to reproduce the run.
Exit code 2 flags configuration or dataset problems, 1 a failed run.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import torch

from .config import ConfigError, RunConfig, from_file
from .data import (KGLoadError, KGValidationError, expand_relations,
                   init_embeddings, load_kg, load_seeds)
from .evaluation import compute_metrics
from .model import SideBatch
from .neighbors import backend_name
from .synth import gen_synth
from .training import TrainingDiverged, load_checkpoint, save_checkpoint, train

SWEEP_AXES = {
    # axis -> (default values, override keys per value)
    "dims": (["50", "100", "150"], lambda v: {"d_r": v, "d_o": v}),
    "depth": (["1", "2", "3"], lambda v: {"depth": v}),
    "ratio": (["0.25", "0.3", "0.35", "0.4", "0.45", "0.5"], lambda v: {"ratio": v}),
    "mode": (["1", "2", "3"], lambda v: {"cycle_mode": v}),
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--vectors", help="word-vector file (default: <dataset>/vectors.txt)")
    p.add_argument("--variant", choices=["base", "semi"])
    p.add_argument("--ablation", choices=["none", "wo-E", "wo-O", "wo-C"])
    p.add_argument("--mode", type=int, choices=[1, 2, 3], help="decoder cycle mode")
    p.add_argument("--depth", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ratio", type=float, help="train fraction of the links")
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key; repeatable")


def _config_from_args(args) -> RunConfig:
    cfg = from_file(args.config) if args.config else RunConfig()
    overrides: dict[str, str] = {}
    direct = {
        "dataset": args.dataset, "vectors": args.vectors, "variant": args.variant,
        "ablation": args.ablation, "cycle_mode": args.mode, "depth": args.depth,
        "seed": args.seed, "ratio": args.ratio, "epochs": args.epochs, "out": args.out,
    }
    for key, value in direct.items():
        if value is not None:
            overrides[key] = str(value)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    return cfg.with_overrides(overrides)


def _load_dataset(cfg: RunConfig):
    ds = Path(cfg.dataset)
    if not cfg.dataset or not ds.is_dir():
        raise ConfigError(f"dataset directory not found: {ds}")
    kg1 = load_kg(ds, 1)
    kg2 = load_kg(ds, 2)
    g1 = expand_relations(kg1)
    g2 = expand_relations(kg2)
    seeds = load_seeds(ds / "ref_ent_ids", cfg.ratio, cfg.seed, kg1=kg1, kg2=kg2)
    vec = cfg.vectors_path()
    x1 = init_embeddings(kg1, vec, cfg.d_e, cfg.seed).values
    x2 = init_embeddings(kg2, vec, cfg.d_e, cfg.seed).values
    return g1, g2, seeds, x1, x2


def run_training(cfg: RunConfig):
    """Shared train-then-evaluate path; returns (result, report)."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    g1, g2, seeds, x1, x2 = _load_dataset(cfg)
    result = train(g1, g2, x1, x2, seeds, cfg.model_config(), cfg.train_config(),
                   log_dir=out)
    report = compute_metrics(result.emb1, result.emb2, seeds.test_pairs)
    (out / "config.snapshot").write_text(cfg.to_text())
    (out / "metrics.json").write_text(report.to_json() + "\n")
    save_checkpoint(out / "checkpoint.bin", result.model, result.state,
                    cfg.model_config(), cfg.train_config(), result.x1, result.x2,
                    epoch=cfg.epochs, test_pairs=seeds.test_pairs)
    return result, report


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    t0 = time.time()
    result, report = run_training(cfg)
    fwd = report.forward
    print(f"kNN backend: {backend_name}")
    print(f"trained {cfg.epochs} epochs in {time.time() - t0:.1f}s, "
          f"final loss {result.losses[-1]:.4f}, pairs {result.state.n_pairs}")
    print(f"kg1->kg2  hits@1 {fwd.hits[1]:.2f}  hits@10 {fwd.hits[10]:.2f}  "
          f"mrr {fwd.mrr:.4f}  (n={fwd.n})")
    print(f"artifacts in {cfg.out}")
    return 0


def cmd_evaluate(args) -> int:
    try:
        ckpt = load_checkpoint(args.checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load checkpoint {args.checkpoint}: {exc}") from exc
    ds = Path(args.dataset)
    if not ds.is_dir():
        raise ConfigError(f"dataset directory not found: {ds}")
    g1 = expand_relations(load_kg(ds, 1))
    g2 = expand_relations(load_kg(ds, 2))
    if ckpt.x1.shape[0] != g1.n_entities or ckpt.x2.shape[0] != g2.n_entities:
        raise ConfigError(
            f"checkpoint was trained on {ckpt.x1.shape[0]}/{ckpt.x2.shape[0]} entities, "
            f"dataset has {g1.n_entities}/{g2.n_entities}")
    if ckpt.x1.shape[1] != ckpt.model_cfg.d_e:
        raise ConfigError("checkpoint inputs disagree with its model dims")
    if ckpt.test_pairs.shape[0] == 0:
        raise ConfigError("checkpoint carries no test pairs to rank")
    batch1 = SideBatch.from_graph(g1, ckpt.x1)
    batch2 = SideBatch.from_graph(g2, ckpt.x2)
    with torch.no_grad():
        emb1 = ckpt.model.forward(batch1).to(torch.float64).numpy()
        emb2 = ckpt.model.forward(batch2).to(torch.float64).numpy()
    report = compute_metrics(emb1, emb2, ckpt.test_pairs)
    text = report.to_json() + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    values, to_overrides = SWEEP_AXES[args.axis]
    if args.values:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["axis,value,hits1,hits10,mrr,status"]
    for value in values:
        cell_dir = out / f"cell_{args.axis}_{value}"
        try:
            cell_cfg = cfg.with_overrides({**to_overrides(value), "out": str(cell_dir)})
            _, report = run_training(cell_cfg)
            fwd = report.forward
            rows.append(f"{args.axis},{value},{fwd.hits[1]:.4f},{fwd.hits[10]:.4f},"
                        f"{fwd.mrr:.6f},ok")
        except Exception as exc:  # keep sweeping; the row records the failure
            print(f"cell {args.axis}={value} failed: {exc}", file=sys.stderr)
            rows.append(f"{args.axis},{value},,,,error")
        (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    print(f"sweep results in {out / 'sweep.csv'}")
    return 0


def cmd_gen_synth(args) -> int:
    summary = gen_synth(args.entities, args.relations, args.triples, args.noise,
                        args.seed, args.out, dim=args.dim)
    print(f"wrote pair to {summary.out_dir}: {summary.n_entities} entities, "
          f"{summary.n_relations} relations, {summary.n_triples_kg1}/"
          f"{summary.n_triples_kg2} triples, vectors dim {summary.dim}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="triplealign",
        description="cross-lingual entity alignment over KG pairs")
    sub = p.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train a model and write run artifacts")
    _add_run_flags(tr)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("evaluate", help="re-rank a checkpoint against a dataset")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--out", help="also write metrics.json here")
    ev.set_defaults(func=cmd_evaluate)

    sw = sub.add_parser("sweep", help="grid over one config axis")
    _add_run_flags(sw)
    sw.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sw.add_argument("--values", help="comma-separated axis values (defaults per axis)")
    sw.set_defaults(func=cmd_sweep)

    gs = sub.add_parser("gen-synth", help="generate a synthetic aligned pair")
    gs.add_argument("--entities", type=int, required=True)
    gs.add_argument("--relations", type=int, required=True)
    gs.add_argument("--triples", type=int, required=True)
    gs.add_argument("--noise", type=float, default=0.0)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--dim", type=int, default=64)
    gs.add_argument("--out", required=True)
    gs.set_defaults(func=cmd_gen_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KGLoadError, KGValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
