"""Learnable parameters and the item-conditioned attentive forward pass.

A user is a small stack of persona vectors. For a candidate item, persona
and item vectors are mapped into a shared attention space, dot-product
affinities are softmaxed into weights, and the weighted persona mix is
scored against the item vector plus an item bias.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ModelConfig:
    num_users: int
    num_items: int
    embedding_dim: int = 64
    attention_dim: int = 64
    personas: int = 2
    seed: int = 0

    def __post_init__(self):
        if min(self.embedding_dim, self.attention_dim, self.personas) < 1:
            raise ValueError("embedding_dim, attention_dim and personas must be >= 1")
        if min(self.num_users, self.num_items) < 1:
            raise ValueError("num_users and num_items must be >= 1")


@dataclass
class PersonaModel:
    """All learnable parameter blocks.

    personas:       (num_users, r, d)   per-user persona rows
    item_vectors:   (num_items, d)
    attn_user_map:  (d, d_a)            persona -> attention space
    attn_item_map:  (d_a, d)            item -> attention space
    item_bias:      (num_items,)
    """

    config: ModelConfig
    personas: np.ndarray
    item_vectors: np.ndarray
    attn_user_map: np.ndarray
    attn_item_map: np.ndarray
    item_bias: np.ndarray

    def parameter_blocks(self) -> dict[str, np.ndarray]:
        return {
            "personas": self.personas,
            "item_vectors": self.item_vectors,
            "attn_user_map": self.attn_user_map,
            "attn_item_map": self.attn_item_map,
            "item_bias": self.item_bias,
        }

    def copy(self) -> "PersonaModel":
        return PersonaModel(
            config=self.config,
            **{k: v.copy() for k, v in self.parameter_blocks().items()},
        )


@dataclass
class AttentionTrace:
    """Intermediates of one (user, item) forward pass."""

    persona_attn_vectors: np.ndarray  # (r, d_a)
    item_attn_vector: np.ndarray  # (d_a,)
    attn_logits: np.ndarray  # (r,)
    attn_weights: np.ndarray  # (r,)
    attentive_user: np.ndarray  # (d,)
    score: float


def init_model(config: ModelConfig, rng: np.random.Generator) -> PersonaModel:
    """Embeddings ~ N(0, 0.01^2), attention maps ~ U(+-sqrt(6/(d+d_a))),
    biases zero. Deterministic per generator state."""
    d, da = config.embedding_dim, config.attention_dim
    limit = np.sqrt(6.0 / (d + da))
    return PersonaModel(
        config=config,
        personas=rng.normal(0.0, 0.01, size=(config.num_users, config.personas, d)),
        item_vectors=rng.normal(0.0, 0.01, size=(config.num_items, d)),
        attn_user_map=rng.uniform(-limit, limit, size=(d, da)),
        attn_item_map=rng.uniform(-limit, limit, size=(da, d)),
        item_bias=np.zeros(config.num_items),
    )


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def attend(model: PersonaModel, user: int, item: int) -> AttentionTrace:
    """Forward pass for one (user, item) pair."""
    personas = model.personas[user]  # (r, d)
    v = model.item_vectors[item]  # (d,)
    psi = personas @ model.attn_user_map  # (r, d_a)
    phi = model.attn_item_map @ v  # (d_a,)
    logits = psi @ phi  # (r,)
    weights = softmax(logits)
    x = weights @ personas  # (d,)
    score = float(x @ v + model.item_bias[item])
    return AttentionTrace(
        persona_attn_vectors=psi,
        item_attn_vector=phi,
        attn_logits=logits,
        attn_weights=weights,
        attentive_user=x,
        score=score,
    )


def score_all_items(model: PersonaModel, user: int, candidates: np.ndarray) -> np.ndarray:
    """Batched scores for one user over a list of candidate items;
    matches mapping attend() over the list."""
    candidates = np.asarray(candidates, dtype=np.intp)
    personas = model.personas[user]  # (r, d)
    items = model.item_vectors[candidates]  # (m, d)
    psi = personas @ model.attn_user_map  # (r, d_a)
    phi = items @ model.attn_item_map.T  # (m, d_a)
    logits = psi @ phi.T  # (r, m)
    weights = softmax(logits, axis=0)  # (r, m)
    x = weights.T @ personas  # (m, d)
    return np.einsum("md,md->m", x, items) + model.item_bias[candidates]


def model_scorer(model: PersonaModel):
    """Scorer callable (user, candidates) -> scores used by the evaluators."""

    def scorer(user: int, candidates: np.ndarray) -> np.ndarray:
        return score_all_items(model, user, candidates)

    return scorer


def save_checkpoint(
    path,
    model: PersonaModel,
    user_ids: list[str] | None = None,
    item_ids: list[str] | None = None,
    extra: dict | None = None,
) -> None:
    """Write a self-describing .npz with config, id maps and all blocks.
    Round-trip through load_checkpoint is bit-exact."""
    meta = {
        "config": asdict(model.config),
        "user_ids": user_ids,
        "item_ids": item_ids,
        "extra": extra or {},
    }
    np.savez(
        path,
        meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        **model.parameter_blocks(),
    )


def load_checkpoint(path) -> tuple[PersonaModel, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        model = PersonaModel(
            config=ModelConfig(**meta["config"]),
            personas=data["personas"],
            item_vectors=data["item_vectors"],
            attn_user_map=data["attn_user_map"],
            attn_item_map=data["attn_item_map"],
            item_bias=data["item_bias"],
        )
    return model, meta
