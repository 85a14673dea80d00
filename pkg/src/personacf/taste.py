"""Model-neutral taste space and taste-distribution distance reporting.

Items are embedded by PCA of the binary user-item interaction matrix
(each item described by the users who consumed it) and grouped into
taste clusters by K-means. A list of items induces a distribution over
clusters: average the per-item vectors of cosine distances to the
cluster means, then softmax. Recommendation lists are compared against
user histories with the Jensen-Shannon divergence (square-root form)
and the Hellinger distance.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import Interactions, Split
from .kmeans import kmeans
from .ranking import top_k_recommendations

DEFAULT_PCA_DIMS = 100
DEFAULT_CLUSTERS = 50


@dataclass
class TasteSpace:
    item_vectors: np.ndarray  # (num_items, pca_dims)
    cluster_means: np.ndarray  # (k, pca_dims)
    pca_basis: np.ndarray  # (pca_dims, num_users), rows = components
    pca_mean: np.ndarray  # (num_users,) column mean removed before projection
    centered: bool = True


@dataclass
class TddReport:
    per_user: list[tuple[int, float, float]]  # (user, js, hellinger)
    mean_js: float
    mean_hellinger: float
    skipped: list[int] = field(default_factory=list)


def build_taste_space(
    train: Interactions,
    pca_dims: int = DEFAULT_PCA_DIMS,
    k: int = DEFAULT_CLUSTERS,
    rng: np.random.Generator | None = None,
    center: bool = True,
    kmeans_restarts: int = 3,
) -> TasteSpace:
    """PCA the item columns of the binary interaction matrix down to
    ``pca_dims`` and K-means the projected items into ``k`` clusters.

    If the matrix rank falls short of ``pca_dims`` the trailing
    components are zero-padded with a warning.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    R = np.zeros((train.num_users, train.num_items))
    for u, j in train.events:
        R[u, j] = 1.0
    X = R.T  # items as rows, user coordinates as features
    mean = X.mean(axis=0) if center else np.zeros(train.num_users)
    Xc = X - mean
    # SVD of the centered matrix: right singular vectors are the
    # principal axes, ordered by decreasing singular value
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    avail = min(pca_dims, int(np.count_nonzero(s > s[0] * 1e-12)) if len(s) else 0)
    basis = np.zeros((pca_dims, train.num_users))
    basis[:avail] = Vt[:avail]
    if avail < pca_dims:
        warnings.warn(
            f"interaction matrix rank {avail} < {pca_dims} requested PCA "
            "dimensions; trailing components zero-padded",
            stacklevel=2,
        )
    vectors = Xc @ basis.T  # (num_items, pca_dims)
    means, _, _ = kmeans(vectors, k, rng, n_init=kmeans_restarts)
    return TasteSpace(
        item_vectors=vectors,
        cluster_means=means,
        pca_basis=basis,
        pca_mean=mean,
        centered=center,
    )


def taste_distribution(items, space: TasteSpace) -> np.ndarray:
    """Softmax of the list-averaged cosine distances to the cluster means.

    Follows the construction literally: larger average distance to a
    cluster means larger softmax weight for that cluster.
    """
    items = np.asarray(items, dtype=np.intp)
    if len(items) == 0:
        raise ValueError("item list must be non-empty")
    vecs = space.item_vectors[items]  # (n, p)
    means = space.cluster_means  # (k, p)
    v_norm = np.linalg.norm(vecs, axis=1)
    m_norm = np.linalg.norm(means, axis=1)
    sims = np.zeros((len(items), len(means)))
    ok = v_norm > 0
    denom = np.outer(v_norm[ok], m_norm)
    denom[denom == 0] = 1.0
    sims[ok] = (vecs[ok] @ means.T) / denom
    if not ok.all():
        warnings.warn(
            "zero-norm item vector in taste space; using maximal distance",
            stacklevel=2,
        )
    dist = 1.0 - sims  # cosine distance; zero-norm rows stay at 1
    avg = dist.mean(axis=0)
    exp = np.exp(avg - avg.max())
    return exp / exp.sum()


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Square root of the mean of the two KL divergences to the pointwise
    mean, natural log. Zero-probability entries contribute nothing."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = 0.5 * (p + q)

    def kl(a):
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / m[mask])))

    return float(np.sqrt(max(0.5 * (kl(p) + kl(q)), 0.0)))


def hellinger(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.linalg.norm(np.sqrt(p) - np.sqrt(q)) / np.sqrt(2.0))


def tdd_report(
    scorer,
    split: Split,
    space: TasteSpace,
    list_size: int = 30,
) -> TddReport:
    """Compare each user's top-``list_size`` recommendations against the
    taste distribution of their training history."""
    per_user: list[tuple[int, float, float]] = []
    skipped: list[int] = []
    for user in range(split.train.num_users):
        history = split.train.per_user_items[user]
        if not history:
            skipped.append(user)
            continue
        recs, _ = top_k_recommendations(scorer, user, split.train, list_size)
        if not recs:
            skipped.append(user)
            continue
        d = taste_distribution(recs, space)
        t = taste_distribution(history, space)
        per_user.append((user, js_divergence(d, t), hellinger(d, t)))
    n = len(per_user)
    return TddReport(
        per_user=per_user,
        mean_js=sum(r[1] for r in per_user) / n if n else 0.0,
        mean_hellinger=sum(r[2] for r in per_user) / n if n else 0.0,
        skipped=skipped,
    )


def save_taste_space(path, space: TasteSpace) -> None:
    np.savez(
        path,
        item_vectors=space.item_vectors,
        cluster_means=space.cluster_means,
        pca_basis=space.pca_basis,
        pca_mean=space.pca_mean,
        meta=np.frombuffer(
            json.dumps({"centered": space.centered}).encode(), dtype=np.uint8
        ),
    )


def load_taste_space(path) -> TasteSpace:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        return TasteSpace(
            item_vectors=data["item_vectors"],
            cluster_means=data["cluster_means"],
            pca_basis=data["pca_basis"],
            pca_mean=data["pca_mean"],
            centered=meta["centered"],
        )
