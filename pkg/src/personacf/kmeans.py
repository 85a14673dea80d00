"""Small dense K-means with k-means++ seeding and restarts."""

from __future__ import annotations

import numpy as np


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = np.square(points - centroids[0]).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = points[rng.integers(n)]
            continue
        centroids[c] = points[np.searchsorted(np.cumsum(d2 / total), rng.random())]
        d2 = np.minimum(d2, np.square(points - centroids[c]).sum(axis=1))
    return centroids


def _lloyd(points, centroids, max_iter, tol):
    objectives = []
    labels = None
    for _ in range(max_iter):
        d2 = (
            np.square(points).sum(axis=1)[:, None]
            - 2.0 * points @ centroids.T
            + np.square(centroids).sum(axis=1)[None, :]
        )
        labels = d2.argmin(axis=1)
        objectives.append(float(d2[np.arange(len(points)), labels].sum()))
        new = centroids.copy()
        shift = 0.0
        for c in range(len(centroids)):
            members = points[labels == c]
            if len(members):
                new[c] = members.mean(axis=0)
                shift = max(shift, float(np.abs(new[c] - centroids[c]).max()))
        centroids = new
        if shift < tol:
            break
    return centroids, labels, objectives


def kmeans(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    n_init: int = 3,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Cluster ``points`` into k groups; returns (centroids, labels,
    per-iteration objective of the winning restart). k is capped at the
    number of distinct points."""
    points = np.asarray(points, dtype=float)
    distinct = np.unique(points, axis=0)
    k = min(k, len(distinct))
    if k == len(distinct):
        # exact solution: one centroid per distinct point
        d2 = (
            np.square(points).sum(axis=1)[:, None]
            - 2.0 * points @ distinct.T
            + np.square(distinct).sum(axis=1)[None, :]
        )
        labels = d2.argmin(axis=1)
        return distinct, labels, [0.0]
    best = None
    for _ in range(n_init):
        init = _kmeans_pp_init(points, k, rng)
        centroids, labels, objectives = _lloyd(points, init, max_iter, tol)
        if best is None or objectives[-1] < best[2][-1]:
            best = (centroids, labels, objectives)
    return best
