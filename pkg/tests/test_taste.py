import math

import numpy as np
import pytest

from conftest import make_interactions, two_taste_corpus
from personacf.corpus import split_leave_one_out
from personacf.kmeans import kmeans
from personacf.taste import (
    TasteSpace,
    build_taste_space,
    hellinger,
    js_divergence,
    taste_distribution,
    tdd_report,
)


def random_distribution(rng, n=50):
    x = rng.random(n) + 1e-6
    return x / x.sum()


def js_oracle(p, q):
    """Scalar re-implementation with explicit loops."""
    m = [(pi + qi) / 2 for pi, qi in zip(p, q)]
    kl_p = sum(pi * math.log(pi / mi) for pi, mi in zip(p, m) if pi > 0)
    kl_q = sum(qi * math.log(qi / mi) for qi, mi in zip(q, m) if qi > 0)
    return math.sqrt((kl_p + kl_q) / 2)


class TestKMeans:
    def test_two_tight_blobs(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0, 0.01, size=(20, 3)) + np.array([5, 0, 0])
        b = rng.normal(0, 0.01, size=(20, 3)) + np.array([-5, 0, 0])
        points = np.vstack([a, b])
        centroids, labels, _ = kmeans(points, 2, rng)
        assert len(np.unique(labels[:20])) == 1
        assert len(np.unique(labels[20:])) == 1
        got = sorted(centroids[:, 0])
        assert got[0] == pytest.approx(-5, abs=0.1)
        assert got[1] == pytest.approx(5, abs=0.1)

    def test_objective_non_increasing(self):
        rng = np.random.default_rng(1)
        points = rng.normal(size=(200, 5))
        _, _, objectives = kmeans(points, 8, rng, n_init=1)
        assert all(b <= a + 1e-9 for a, b in zip(objectives, objectives[1:]))

    def test_k_capped_at_distinct_points(self):
        points = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
        centroids, labels, _ = kmeans(points, 5, np.random.default_rng(0))
        assert len(centroids) == 2
        assert labels[0] == labels[2] != labels[1]


class TestBuildTasteSpace:
    def test_disjoint_blocks_separate(self):
        # two user groups consuming two disjoint item blocks
        rows = [[0, 1, 2, 3] for _ in range(10)] + [[4, 5, 6, 7] for _ in range(10)]
        data = make_interactions(rows, num_items=8)
        with pytest.warns(UserWarning):
            space = build_taste_space(data, pca_dims=4, k=2, rng=np.random.default_rng(0))
        d = space.item_vectors[:, None, :] - space.cluster_means[None, :, :]
        labels = np.square(d).sum(axis=2).argmin(axis=1)
        assert len(set(labels[:4])) == 1
        assert len(set(labels[4:])) == 1
        assert labels[0] != labels[4]

    def test_full_rank_projection_preserves_geometry(self):
        rng = np.random.default_rng(2)
        rows = [rng.permutation(12)[: rng.integers(3, 9)].tolist() for _ in range(30)]
        data = make_interactions(rows, num_items=12)
        with pytest.warns(UserWarning):
            # centering drops one rank, so the last component is padding
            space = build_taste_space(data, pca_dims=12, k=3, rng=rng)
        # with every component kept the projection is an isometry of the
        # centered item columns: pairwise distances must be preserved
        R = np.zeros((data.num_users, data.num_items))
        for u, j in data.events:
            R[u, j] = 1.0
        X = R.T - R.T.mean(axis=0)
        orig = np.linalg.norm(X[:, None] - X[None, :], axis=2)
        proj = np.linalg.norm(
            space.item_vectors[:, None] - space.item_vectors[None, :], axis=2
        )
        np.testing.assert_allclose(proj, orig, atol=1e-8)

    def test_shapes(self):
        rng = np.random.default_rng(3)
        rows = [rng.permutation(40)[:10].tolist() for _ in range(25)]
        data = make_interactions(rows, num_items=40)
        space = build_taste_space(data, pca_dims=10, k=5, rng=rng)
        assert space.item_vectors.shape == (40, 10)
        assert space.cluster_means.shape == (5, 10)
        assert np.all(np.isfinite(space.item_vectors))
        assert np.all(np.isfinite(space.cluster_means))


class TestTasteDistribution:
    def _space(self):
        vectors = np.eye(4)
        means = np.eye(4)[:3]
        return TasteSpace(
            item_vectors=vectors,
            cluster_means=means,
            pca_basis=np.eye(4),
            pca_mean=np.zeros(4),
        )

    def test_item_at_centroid(self):
        space = self._space()
        probs = taste_distribution([0], space)
        # distance 0 to the matching cluster, 1 to the orthogonal ones:
        # softmax of distances puts the minimum weight on the match
        assert probs.argmin() == 0
        assert probs[1] == pytest.approx(probs[2], abs=1e-12)
        expected_min = math.exp(0) / (math.exp(0) + 2 * math.e)
        assert probs[0] == pytest.approx(expected_min, abs=1e-12)

    def test_duplicate_items_idempotent(self):
        space = self._space()
        np.testing.assert_allclose(
            taste_distribution([2, 2], space), taste_distribution([2], space), atol=1e-12
        )

    def test_sums_to_one(self):
        rng = np.random.default_rng(4)
        space = TasteSpace(
            item_vectors=rng.normal(size=(30, 6)),
            cluster_means=rng.normal(size=(5, 6)),
            pca_basis=np.zeros((6, 10)),
            pca_mean=np.zeros(10),
        )
        for _ in range(10):
            items = rng.choice(30, size=8, replace=False)
            probs = taste_distribution(items, space)
            assert probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(probs >= 0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        space = TasteSpace(
            item_vectors=rng.normal(size=(30, 6)),
            cluster_means=rng.normal(size=(5, 6)),
            pca_basis=np.zeros((6, 10)),
            pca_mean=np.zeros(10),
        )
        items = [3, 17, 8, 25]
        np.testing.assert_allclose(
            taste_distribution(items, space),
            taste_distribution(items[::-1], space),
            atol=1e-12,
        )

    def test_zero_norm_vector_warns(self):
        space = self._space()
        space.item_vectors = np.vstack([space.item_vectors, np.zeros(4)])
        with pytest.warns(UserWarning, match="zero-norm"):
            probs = taste_distribution([4], space)
        # maximal distance everywhere -> uniform softmax
        np.testing.assert_allclose(probs, np.full(3, 1 / 3), atol=1e-12)


class TestDivergences:
    def test_identical_distributions_are_zero(self):
        rng = np.random.default_rng(6)
        p = random_distribution(rng)
        assert js_divergence(p, p) == 0.0
        assert hellinger(p, p) == 0.0

    def test_disjoint_support(self):
        p = np.array([1.0, 0.0])
        q = np.array([0.0, 1.0])
        assert js_divergence(p, q) == pytest.approx(math.sqrt(math.log(2)), abs=1e-12)
        assert hellinger(p, q) == pytest.approx(1.0, abs=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = random_distribution(rng, 10)
            q = random_distribution(rng, 10)
            assert js_divergence(p, q) == pytest.approx(js_oracle(p, q), abs=1e-12)

    def test_property_sweep(self):
        rng = np.random.default_rng(8)
        bound = math.sqrt(math.log(2))
        for _ in range(10_000):
            p = random_distribution(rng, 8)
            q = random_distribution(rng, 8)
            js = js_divergence(p, q)
            hel = hellinger(p, q)
            assert 0.0 <= hel <= 1.0
            assert 0.0 <= js <= bound + 1e-12
            assert js == pytest.approx(js_divergence(q, p), abs=1e-12)
            assert hel == pytest.approx(hellinger(q, p), abs=1e-12)

    def test_zero_iff_equal(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            p = random_distribution(rng, 6)
            q = random_distribution(rng, 6)
            if np.allclose(p, q, atol=1e-12):
                continue
            assert js_divergence(p, q) > 0
            assert hellinger(p, q) > 0


class TestTddReport:
    def test_history_as_recommendations_gives_zero(self):
        data, _, _ = two_taste_corpus(seed=10)
        split = split_leave_one_out(data)
        space = build_taste_space(data, pca_dims=20, k=5, rng=np.random.default_rng(0))

        report_rows = []
        for user in range(data.num_users):
            history = split.train.per_user_items[user]
            d = taste_distribution(history, space)
            t = taste_distribution(history, space)
            report_rows.append((js_divergence(d, t), hellinger(d, t)))
        for js, hel in report_rows:
            assert js == pytest.approx(0.0, abs=1e-9)
            assert hel == pytest.approx(0.0, abs=1e-9)

    def test_report_runs_and_aggregates(self):
        data, _, _ = two_taste_corpus(seed=11)
        split = split_leave_one_out(data)
        space = build_taste_space(split.train, pca_dims=20, k=5, rng=np.random.default_rng(0))
        rng = np.random.default_rng(1)
        table = rng.normal(size=(data.num_users, data.num_items))
        report = tdd_report(lambda u, c: table[u][c], split, space, list_size=10)
        assert len(report.per_user) == data.num_users
        assert report.mean_js == pytest.approx(
            np.mean([r[1] for r in report.per_user]), abs=1e-12
        )
        assert report.mean_hellinger == pytest.approx(
            np.mean([r[2] for r in report.per_user]), abs=1e-12
        )
