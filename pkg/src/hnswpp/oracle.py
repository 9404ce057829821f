"""Brute-force exact k-nearest-neighbor search over a vector set.

Ground truth for recall measurements, neighbor distances for the LID
estimator, and the sampled average-distance estimate that feeds the
"auto" distance threshold. All distances are true L2, accumulated in
float64 even when the vectors are stored as float32, so the oracle
always out-precisions the index it is checking. Ties are broken by
ascending label everywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InputError


def array_checksum(arr: np.ndarray) -> str:
    """SHA-256 over the shape and raw little-endian float32 bytes of an array."""
    a = np.ascontiguousarray(arr, dtype="<f4")
    h = hashlib.sha256()
    h.update(repr(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


def squared_distances(base: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Squared L2 distances from one query to every base row, in float64."""
    b = np.asarray(base, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    diff = b - q
    return np.einsum("ij,ij->i", diff, diff)


def exact_knn(base: np.ndarray, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The k exhaustively-computed nearest neighbors of query, ascending by
    (distance, label). Raises when k exceeds the base size."""
    base = np.asarray(base)
    n = base.shape[0]
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if k > n:
        raise InputError(f"k={k} exceeds base size {n}")
    d2 = squared_distances(base, query)
    order = np.lexsort((np.arange(n), d2))[:k]
    return [(int(i), float(np.sqrt(d2[i]))) for i in order]


def exact_knn_batch(
    base: np.ndarray, queries: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """exact_knn for a batch of queries.

    Returns (labels, distances) arrays of shape (n_queries, k); rows are
    ascending by (distance, label).
    """
    base = np.asarray(base, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    n = base.shape[0]
    if k > n:
        raise InputError(f"k={k} exceeds base size {n}")
    nq = queries.shape[0]
    labels = np.empty((nq, k), dtype=np.int64)
    dists = np.empty((nq, k), dtype=np.float64)
    arange = np.arange(n)
    b_norms = np.einsum("ij,ij->i", base, base)
    block = max(1, int(2e7) // max(n, 1))
    for q0 in range(0, nq, block):
        q1 = min(q0 + block, nq)
        qb = queries[q0:q1]
        d2 = b_norms[None, :] - 2.0 * (qb @ base.T) + np.einsum("ij,ij->i", qb, qb)[:, None]
        np.maximum(d2, 0.0, out=d2)
        for r in range(q1 - q0):
            order = np.lexsort((arange, d2[r]))[:k]
            labels[q0 + r] = order
            dists[q0 + r] = np.sqrt(d2[r, order])
    return labels, dists


def self_knn_distances(base: np.ndarray, k: int, block: int = 1024) -> np.ndarray:
    """For every base point, the distances to its k nearest other points,
    ascending. The point itself is excluded by index, so duplicates of a
    point still count as neighbors at distance zero."""
    base = np.asarray(base, dtype=np.float64)
    n = base.shape[0]
    if k >= n:
        raise InputError(f"k={k} must be smaller than the dataset size {n}")
    norms = np.einsum("ij,ij->i", base, base)
    out = np.empty((n, k), dtype=np.float64)
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        d2 = norms[i0:i1, None] - 2.0 * (base[i0:i1] @ base.T) + norms[None, :]
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(i1 - i0), np.arange(i0, i1)] = np.inf
        part = np.partition(d2, k - 1, axis=1)[:, :k]
        part.sort(axis=1)
        out[i0:i1] = np.sqrt(part)
    return out


def average_distance(base: np.ndarray, sample_pairs: int = 10_000, seed: int = 0) -> float:
    """Mean L2 distance over seeded random distinct ordered pairs.

    Deterministic under a fixed seed; uses the Philox counter-based
    generator so the estimate is platform independent.
    """
    base = np.asarray(base, dtype=np.float64)
    n = base.shape[0]
    if n < 2:
        raise InputError(f"need at least 2 vectors, got {n}")
    if sample_pairs < 1:
        raise InputError("sample_pairs must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    i = rng.integers(0, n, size=sample_pairs)
    j = rng.integers(0, n - 1, size=sample_pairs)
    j[j >= i] += 1  # remap to skip self-pairs
    diff = base[i] - base[j]
    return float(np.sqrt(np.einsum("ij,ij->i", diff, diff)).mean())


@dataclass
class GroundTruth:
    """Exact top-k_gt answers for a query batch, with staleness checksums."""

    labels: np.ndarray  # (n_queries, k_gt) int64
    distances: np.ndarray  # (n_queries, k_gt) float64, ascending rows
    k_gt: int
    base_checksum: str
    query_checksum: str

    def __post_init__(self):
        if self.labels.shape != self.distances.shape:
            raise InputError("labels and distances shapes differ")
        if self.labels.shape[1] != self.k_gt:
            raise InputError("k_gt does not match row width")

    def __eq__(self, other):
        return (
            isinstance(other, GroundTruth)
            and self.k_gt == other.k_gt
            and self.base_checksum == other.base_checksum
            and self.query_checksum == other.query_checksum
            and np.array_equal(self.labels, other.labels)
            and np.allclose(self.distances, other.distances, rtol=0, atol=0)
        )


def build_ground_truth(base: np.ndarray, queries: np.ndarray, k_gt: int) -> GroundTruth:
    """Exhaustive top-k_gt for every query, plus checksums of both inputs."""
    labels, dists = exact_knn_batch(base, queries, k_gt)
    return GroundTruth(
        labels=labels,
        distances=dists,
        k_gt=k_gt,
        base_checksum=array_checksum(base),
        query_checksum=array_checksum(queries),
    )
