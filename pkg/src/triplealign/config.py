"""Flat `key = value` run configuration with one canonical serialization.

Sweeps mutate configs programmatically, so round-tripping must be lossless:
`from_text(cfg.to_text())` reconstructs an equal RunConfig.  Unknown keys
and malformed values are errors, never silently dropped.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .model import ModelConfig
from .training import TrainConfig

VARIANTS = ("base", "semi")
ABLATIONS = ("none", "wo-E", "wo-O", "wo-C")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: str = ""
    vectors: str = "vectors.txt"   # relative to dataset dir unless absolute
    out: str = "runs/out"
    variant: str = "base"
    ablation: str = "none"
    d_e: int = 300
    d_r: int = 100
    d_o: int = 100
    depth: int = 2
    cycle_mode: int = 2
    gate_bias: float = 0.0
    ratio: float = 0.3
    epochs: int = 60
    lr: float = 1e-3
    margin: float = 3.0
    neg_k: int = 5
    expansion_period: int = 5
    train_inputs: bool = False
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(f"ratio must be in (0, 1), got {self.ratio}")
        for name in ("d_e", "d_r", "d_o", "depth", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """New config with string-typed overrides applied and re-validated."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        values = dataclasses.asdict(self)
        for key, raw in overrides.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _convert(key, raw, self.__dataclass_fields__[key].type)
        return RunConfig(**values)

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            d_e=self.d_e, d_r=self.d_r, d_o=self.d_o, depth=self.depth,
            cycle_mode=self.cycle_mode, gate_bias=self.gate_bias,
            use_global_relation=self.ablation != "wo-E",
            use_ontology=self.ablation != "wo-O",
            use_cycle=self.ablation != "wo-C",
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, lr=self.lr, margin=self.margin, neg_k=self.neg_k,
            semi=self.variant == "semi", expansion_period=self.expansion_period,
            train_inputs=self.train_inputs, seed=self.seed, device=self.device,
        )

    def vectors_path(self) -> Path:
        p = Path(self.vectors)
        return p if p.is_absolute() else Path(self.dataset) / p


def _convert(key: str, raw, typ) -> object:
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    typ = str(typ)
    try:
        if typ == "bool":
            if raw not in ("true", "false"):
                raise ValueError("expected true/false")
            return raw == "true"
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None


def from_text(text: str) -> RunConfig:
    overrides: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        overrides[key.strip()] = value.strip()
    return RunConfig().with_overrides(overrides)


def from_file(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return from_text(path.read_text())
