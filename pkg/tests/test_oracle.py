"""Exact-oracle tests, including an independent second brute force used as
the oracle-of-the-oracle."""

import numpy as np
import pytest

from hnswpp import (
    InputError,
    average_distance,
    build_ground_truth,
    exact_knn,
    exact_knn_batch,
    self_knn_distances,
)
from hnswpp.oracle import array_checksum


def naive_knn(base, query, k):
    """Second, structurally different brute force: per-label loop keeping a
    sorted candidate list instead of a vectorized full sort."""
    best = []
    for label in range(len(base)):
        d = 0.0
        for a, b in zip(base[label].tolist(), np.asarray(query).tolist()):
            d += (float(a) - float(b)) ** 2
        best.append((d ** 0.5, label))
    best.sort()
    return [(label, dist) for dist, label in best[:k]]


def test_hand_case_1d():
    base = np.array([[0.0], [1.0], [2.0]], dtype=np.float32)
    result = exact_knn(base, np.array([0.9], dtype=np.float32), 2)
    assert [label for label, _ in result] == [1, 0]
    assert result[0][1] == pytest.approx(0.1, abs=1e-7)
    assert result[1][1] == pytest.approx(0.9, abs=1e-7)


def test_k_equals_base_size_returns_all_sorted():
    rng = np.random.default_rng(1)
    base = rng.random((7, 3)).astype(np.float32)
    result = exact_knn(base, base[2], 7)
    assert sorted(label for label, _ in result) == list(range(7))
    dists = [d for _, d in result]
    assert dists == sorted(dists)


def test_k_too_large_rejected():
    base = np.zeros((3, 2), dtype=np.float32)
    with pytest.raises(InputError):
        exact_knn(base, base[0], 4)


def test_matches_independent_rescan():
    rng = np.random.default_rng(7)
    base = rng.random((50, 8)).astype(np.float32)
    for qi in range(5):
        query = rng.random(8).astype(np.float32)
        fast = exact_knn(base, query, 10)
        slow = naive_knn(base, query, 10)
        assert [l for l, _ in fast] == [l for l, _ in slow]
        np.testing.assert_allclose(
            [d for _, d in fast], [d for _, d in slow], rtol=1e-9, atol=1e-12
        )


def test_prefix_property():
    rng = np.random.default_rng(3)
    base = rng.random((40, 4)).astype(np.float32)
    query = rng.random(4).astype(np.float32)
    for k in range(1, 12):
        shorter = exact_knn(base, query, k)
        longer = exact_knn(base, query, k + 1)
        assert longer[:k] == shorter


def test_distances_nonnegative_nondecreasing():
    rng = np.random.default_rng(11)
    base = rng.random((30, 5)).astype(np.float32)
    labels, dists = exact_knn_batch(base, rng.random((8, 5)).astype(np.float32), 12)
    assert np.all(dists >= 0)
    assert np.all(np.diff(dists, axis=1) >= 0)


def test_tie_break_by_label():
    base = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
    result = exact_knn(base, np.array([1.0, 0.0], dtype=np.float32), 3)
    assert [l for l, _ in result] == [0, 1, 2]


def test_batch_matches_single():
    rng = np.random.default_rng(5)
    base = rng.random((60, 6)).astype(np.float32)
    queries = rng.random((9, 6)).astype(np.float32)
    labels, dists = exact_knn_batch(base, queries, 5)
    for i in range(9):
        single = exact_knn(base, queries[i], 5)
        assert labels[i].tolist() == [l for l, _ in single]
        np.testing.assert_allclose(dists[i], [d for _, d in single], rtol=1e-12)


def test_self_knn_excludes_self_but_keeps_duplicates():
    base = np.array([[0.0], [0.0], [5.0]], dtype=np.float32)
    dists = self_knn_distances(base, 2)
    # point 0's neighbors: its duplicate at distance 0, then the far point
    np.testing.assert_allclose(dists[0], [0.0, 5.0], atol=1e-12)
    np.testing.assert_allclose(dists[1], [0.0, 5.0], atol=1e-12)


class TestAverageDistance:
    def test_two_points(self):
        base = np.array([[0.0, 0.0], [3.0, 0.0]], dtype=np.float32)
        for pairs in (1, 10, 1000):
            assert average_distance(base, sample_pairs=pairs, seed=0) == pytest.approx(3.0)

    def test_identical_points(self):
        base = np.zeros((5, 3), dtype=np.float32)
        assert average_distance(base, sample_pairs=500, seed=1) == 0.0

    def test_within_3_sigma_of_exhaustive(self):
        rng = np.random.default_rng(13)
        base = rng.random((100, 2)).astype(np.float32)
        diffs = base[:, None, :].astype(np.float64) - base[None, :, :].astype(np.float64)
        all_d = np.sqrt((diffs ** 2).sum(-1))
        mask = ~np.eye(100, dtype=bool)
        exhaustive = all_d[mask].mean()
        sigma = all_d[mask].std() / np.sqrt(10_000)
        estimate = average_distance(base, sample_pairs=10_000, seed=2)
        assert abs(estimate - exhaustive) < 3 * sigma

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(17)
        base = rng.random((50, 4)).astype(np.float32)
        a = average_distance(base, sample_pairs=777, seed=9)
        b = average_distance(base, sample_pairs=777, seed=9)
        assert a == b
        assert a != average_distance(base, sample_pairs=777, seed=10)


class TestGroundTruth:
    def test_self_queries_hit_themselves(self):
        rng = np.random.default_rng(19)
        base = rng.random((25, 4)).astype(np.float32)
        gt = build_ground_truth(base, base[:6], 1)
        assert gt.labels[:, 0].tolist() == list(range(6))
        np.testing.assert_allclose(gt.distances[:, 0], 0.0, atol=1e-12)

    def test_protocol_shape(self):
        # the desk-scale protocol: 10,000 construction points, 1,000 queries
        rng = np.random.default_rng(23)
        base = rng.random((10_000, 8)).astype(np.float32)
        queries = rng.random((1_000, 8)).astype(np.float32)
        gt = build_ground_truth(base, queries, 10)
        assert gt.labels.shape == (1_000, 10)
        assert gt.k_gt == 10

    def test_rerun_identical(self):
        rng = np.random.default_rng(29)
        base = rng.random((40, 3)).astype(np.float32)
        queries = rng.random((7, 3)).astype(np.float32)
        assert build_ground_truth(base, queries, 4) == build_ground_truth(base, queries, 4)

    def test_checksum_tracks_content(self):
        rng = np.random.default_rng(31)
        base = rng.random((10, 3)).astype(np.float32)
        other = base.copy()
        other[0, 0] += 1.0
        assert array_checksum(base) != array_checksum(other)
        assert array_checksum(base) == array_checksum(base.copy())
