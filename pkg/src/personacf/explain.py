"""Persona-level explanation reports.

For one user: each persona's own top-n list (single-persona score
u_k . v_j + b_j over non-consumed items), the final attentive top-n list
with the persona that holds the largest attention weight per item, and
the user's training items labeled the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Interactions
from .model import PersonaModel, model_scorer, softmax
from .ranking import top_k_recommendations


@dataclass
class LabeledItem:
    item: int
    persona: int  # argmax attention weight, lowest index on ties
    weight: float  # the winning attention weight
    score: float | None = None


@dataclass
class ExplanationReport:
    user: int
    persona_lists: list[list[tuple[int, float]]]  # per persona: (item, score)
    final_list: list[LabeledItem]
    training_items: list[LabeledItem]


def _attention_weights(model: PersonaModel, user: int, items: np.ndarray) -> np.ndarray:
    psi = model.personas[user] @ model.attn_user_map  # (r, d_a)
    phi = model.item_vectors[items] @ model.attn_item_map.T  # (m, d_a)
    return softmax(psi @ phi.T, axis=0)  # (r, m)


def explain_user(
    model: PersonaModel,
    user: int,
    data: Interactions,
    n: int,
) -> ExplanationReport:
    """``data`` is the training interactions; n is the list length."""
    if n < 1:
        raise ValueError("n must be >= 1")
    consumed = set(data.per_user_items[user])
    candidates = np.array(
        [j for j in range(data.num_items) if j not in consumed], dtype=np.intp
    )
    personas = model.personas[user]  # (r, d)

    persona_lists = []
    per_persona = personas @ model.item_vectors[candidates].T + model.item_bias[candidates]
    for k in range(model.config.personas):
        order = np.lexsort((candidates, -per_persona[k]))
        top = order[:n]
        persona_lists.append(
            [(int(candidates[i]), float(per_persona[k, i])) for i in top]
        )

    scorer = model_scorer(model)
    final_items, _ = top_k_recommendations(scorer, user, data, n)
    final_arr = np.asarray(final_items, dtype=np.intp)
    final_list = []
    if len(final_arr):
        weights = _attention_weights(model, user, final_arr)
        scores = scorer(user, final_arr)
        labels = weights.argmax(axis=0)  # argmax takes the lowest index on ties
        for i, j in enumerate(final_arr):
            final_list.append(
                LabeledItem(
                    item=int(j),
                    persona=int(labels[i]),
                    weight=float(weights[labels[i], i]),
                    score=float(scores[i]),
                )
            )

    training_items = []
    history = np.asarray(data.per_user_items[user], dtype=np.intp)
    if len(history):
        weights = _attention_weights(model, user, history)
        labels = weights.argmax(axis=0)
        for i, j in enumerate(history):
            training_items.append(
                LabeledItem(
                    item=int(j),
                    persona=int(labels[i]),
                    weight=float(weights[labels[i], i]),
                )
            )

    return ExplanationReport(
        user=user,
        persona_lists=persona_lists,
        final_list=final_list,
        training_items=training_items,
    )


def render_markdown(
    report: ExplanationReport,
    item_ids: list[str] | None = None,
    titles: dict[str, str] | None = None,
) -> str:
    """Human-readable markdown; item titles resolved when provided."""

    def name(j: int) -> str:
        ext = item_ids[j] if item_ids else str(j)
        if titles and ext in titles:
            return titles[ext]
        return ext

    lines = [f"# Recommendations for user {report.user}", ""]
    for k, plist in enumerate(report.persona_lists):
        lines.append(f"## Persona {k}")
        lines.append("")
        lines.append("| rank | item | score |")
        lines.append("|---:|---|---:|")
        for rank, (j, score) in enumerate(plist, start=1):
            lines.append(f"| {rank} | {name(j)} | {score:.4f} |")
        lines.append("")
    lines.append("## Final list")
    lines.append("")
    lines.append("| rank | item | score | persona | attention |")
    lines.append("|---:|---|---:|---:|---:|")
    for rank, li in enumerate(report.final_list, start=1):
        lines.append(
            f"| {rank} | {name(li.item)} | {li.score:.4f} | {li.persona} | {li.weight:.3f} |"
        )
    lines.append("")
    lines.append("## Training items")
    lines.append("")
    lines.append("| item | persona | attention |")
    lines.append("|---|---:|---:|")
    for li in report.training_items:
        lines.append(f"| {name(li.item)} | {li.persona} | {li.weight:.3f} |")
    lines.append("")
    return "\n".join(lines)
