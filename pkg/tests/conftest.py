import os

import numpy as np
import pytest

from personacf.corpus import Interactions, split_leave_one_out


def make_interactions(per_user_items, num_items=None):
    """Build Interactions directly from per-user item index lists."""
    if num_items is None:
        num_items = 1 + max(j for row in per_user_items for j in row)
    events = [(u, j) for u, row in enumerate(per_user_items) for j in row]
    return Interactions(
        num_users=len(per_user_items),
        num_items=num_items,
        events=events,
        per_user_items=[list(row) for row in per_user_items],
        user_index={str(u): u for u in range(len(per_user_items))},
        item_index={str(j): j for j in range(num_items)},
        user_ids=[str(u) for u in range(len(per_user_items))],
        item_ids=[str(j) for j in range(num_items)],
    )


def two_cluster_corpus(seed=0, users_per_side=30, items_per_side=25, history=23):
    """Two disjoint user populations consuming two disjoint item blocks.

    Histories cover most of the user's block so that nearly every ranking
    candidate at evaluation time comes from the other block."""
    rng = np.random.default_rng(seed)
    rows = []
    for side in range(2):
        base = side * items_per_side
        for _ in range(users_per_side):
            items = rng.choice(items_per_side, size=history, replace=False) + base
            rows.append(items.tolist())
    return make_interactions(rows, num_items=2 * items_per_side)


def two_taste_corpus(
    seed=0,
    mixed_users=20,
    a_only_users=80,
    b_only_users=40,
    block_items=100,
    mixed_history=8,
    anchor_history=12,
):
    """Mixed users with 50/50 histories over two item blocks, anchored by
    single-taste populations that give each block coherent co-occurrence.

    The block-A anchor group is twice the size of block B's, so a
    popularity ranking concentrates on block A. Sparse histories over
    large blocks keep within-block co-occurrence dominant; dense
    histories would let items differentiate by their few non-consumers."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(mixed_users):
        a = rng.choice(block_items, size=mixed_history, replace=False)
        b = rng.choice(block_items, size=mixed_history, replace=False) + block_items
        items = np.concatenate([a, b])
        rng.shuffle(items)
        rows.append(items.tolist())
    for _ in range(a_only_users):
        rows.append(rng.choice(block_items, size=anchor_history, replace=False).tolist())
    for _ in range(b_only_users):
        rows.append(
            (rng.choice(block_items, size=anchor_history, replace=False) + block_items).tolist()
        )
    return make_interactions(rows, num_items=2 * block_items), block_items, mixed_users


def ml100k_path():
    """User-supplied MovieLens ratings file; see README for how to point
    the suite at it."""
    path = os.environ.get("PERSONACF_ML100K", "data/ratings.csv")
    return path if os.path.exists(path) else None


@pytest.fixture
def tiny_split():
    data = make_interactions(
        [[0, 1, 2, 3], [2, 3, 4], [0, 4, 5, 1]],
        num_items=6,
    )
    return split_leave_one_out(data)
