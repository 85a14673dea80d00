"""Run configuration: one YAML file per run, unknown keys rejected.

Defaults follow the evaluated setup: 64-dim embeddings and attention
space, 4 negatives per positive, Adam at 0.001 with batches of 256,
100-dim PCA, 50 taste clusters, 30-item recommendation lists.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import yaml


class ConfigError(ValueError):
    pass


def _from_dict(cls, raw: dict, context: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(raw).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    return cls(**raw)


@dataclass
class DatasetConfig:
    path: str = ""
    delimiter: str = "\t"
    columns: list[str] = field(default_factory=lambda: ["user", "item", "rating", "timestamp"])
    header: bool = False
    min_rating: float | None = None


@dataclass
class ModelSection:
    embedding_dim: int = 64
    attention_dim: int = 64
    personas: int = 2


@dataclass
class LossSection:
    alpha: float = 0.5
    lambda_pos: float = 1.0
    lambda_neg: float = 1.0
    negatives_per_positive: int = 4
    learning_rate: float = 0.001
    batch_size: int = 256
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    patience: int = 5
    max_epochs: int = 200


@dataclass
class EvalSection:
    num_sampled_negatives: int = 100
    cutoff: int = 10
    candidate_mode: str = "sampled"


@dataclass
class TasteSection:
    pca_dims: int = 100
    clusters: int = 50
    list_size: int = 30
    center: bool = True


@dataclass
class AispSection:
    personas: int = 2


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelSection = field(default_factory=ModelSection)
    loss: LossSection = field(default_factory=LossSection)
    eval: EvalSection = field(default_factory=EvalSection)
    taste: TasteSection = field(default_factory=TasteSection)
    aisp: AispSection = field(default_factory=AispSection)
    seed: int = 0
    output_dir: str = "runs/default"
    deterministic: bool = True

    def hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


_SECTIONS = {
    "dataset": DatasetConfig,
    "model": ModelSection,
    "loss": LossSection,
    "eval": EvalSection,
    "taste": TasteSection,
    "aisp": AispSection,
}


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    top_known = set(_SECTIONS) | {"seed", "output_dir", "deterministic"}
    unknown = set(raw) - top_known
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in raw:
            kwargs[name] = _from_dict(cls, raw[name], name)
    for scalar in ("seed", "output_dir", "deterministic"):
        if scalar in raw:
            kwargs[scalar] = raw[scalar]
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    return parse_config(raw)
