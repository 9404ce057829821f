"""Local intrinsic dimensionality profiles and layer assignment.

Per-point LID comes from the maximum-likelihood estimator over a point's
k nearest-neighbor distances. Raw values are min-max normalized to [0,1]
and drive the placement of nodes onto graph layers and branches before
construction starts: high-LID points (sparse, outlier-like neighborhoods)
go to the upper layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .oracle import average_distance, self_knn_distances


def estimate_lid(neighbor_distances) -> float:
    """MLE of local intrinsic dimensionality from ascending neighbor distances.

    With d_1 <= ... <= d_k the estimate is (k-1) / sum(log(d_k / d_i)).
    Each d_i is clamped below at d_k * 1e-12 before the log so single
    duplicate neighbors do not blow the estimate up. Raises when fewer
    than two distances are given, when all distances are zero, or when
    all distances are equal (the estimate diverges there).
    """
    d = np.asarray(neighbor_distances, dtype=np.float64)
    if d.ndim != 1 or d.size < 2:
        raise InputError("need at least 2 neighbor distances")
    if np.any(np.diff(d) < 0):
        raise InputError("neighbor distances must be sorted ascending")
    dk = float(d[-1])
    if dk <= 0.0:
        raise InputError("all neighbor distances are zero (duplicate-saturated neighborhood)")
    clamped = np.maximum(d[:-1], dk * 1e-12)
    total = float(np.log(dk / clamped).sum())
    if total <= 0.0:
        raise InputError("all neighbor distances are equal; LID estimate diverges")
    return (d.size - 1) / total


def normalize_lids(raw) -> np.ndarray:
    """Min-max normalize to [0,1]; a constant input maps to all zeros."""
    x = np.asarray(raw, dtype=np.float64)
    if x.size < 1:
        raise InputError("need at least one value")
    lo = x.min()
    hi = x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


@dataclass
class LidProfile:
    """Per-node LID values plus the dataset-level average distance estimate."""

    raw_lids: np.ndarray  # (n,) float64, finite and positive
    normalized_lids: np.ndarray  # (n,) float64 in [0,1]
    k_used: int
    avg_distance: float
    degenerate_labels: tuple[int, ...] = ()  # points that fell back to the max finite LID

    def __len__(self) -> int:
        return len(self.raw_lids)

    def __eq__(self, other):
        return (
            isinstance(other, LidProfile)
            and self.k_used == other.k_used
            and self.avg_distance == other.avg_distance
            and np.array_equal(self.raw_lids, other.raw_lids)
            and np.array_equal(self.normalized_lids, other.normalized_lids)
        )


def build_profile(
    dataset: np.ndarray,
    k: int = 128,
    oracle=None,
    sample_pairs: int = 10_000,
    seed: int = 0,
) -> LidProfile:
    """LID profile of a dataset from exact nearest-neighbor distances.

    `oracle` maps (dataset, k) to an (n, k) array of ascending neighbor
    distances excluding each point itself; the default is the exhaustive
    scan from the oracle module. Points with degenerate neighborhoods
    (all-equal or all-zero distances) receive the dataset's maximum
    finite LID and are listed in `degenerate_labels`.
    """
    data = np.asarray(dataset)
    n = data.shape[0]
    if n <= k:
        raise InputError(f"dataset size {n} must exceed k={k}")
    knn = oracle(data, k) if oracle is not None else self_knn_distances(data, k)
    raw = np.empty(n, dtype=np.float64)
    degenerate = []
    for i in range(n):
        try:
            raw[i] = estimate_lid(knn[i])
        except InputError:
            raw[i] = np.nan
            degenerate.append(i)
    if degenerate:
        finite = raw[np.isfinite(raw)]
        if finite.size == 0:
            raise InputError("every neighborhood is degenerate; cannot build a profile")
        raw[np.isnan(raw)] = finite.max()
    return LidProfile(
        raw_lids=raw,
        normalized_lids=normalize_lids(raw),
        k_used=k,
        avg_distance=average_distance(data, sample_pairs=sample_pairs, seed=seed),
        degenerate_labels=tuple(degenerate),
    )


@dataclass
class LayerAssignment:
    """Pre-construction (layer, branch) placement for every node."""

    layers: np.ndarray  # (n,) int32 in [0, top_l - 1]
    branches: np.ndarray  # (n,) int8, 0 or 1
    n_branches: int
    expected_sizes: np.ndarray | None = field(default=None, repr=False)  # (n_branches, top_l)

    def __len__(self) -> int:
        return len(self.layers)

    def branch_sizes(self) -> list[int]:
        return [int((self.branches == b).sum()) for b in range(self.n_branches)]

    def __eq__(self, other):
        return (
            isinstance(other, LayerAssignment)
            and self.n_branches == other.n_branches
            and np.array_equal(self.layers, other.layers)
            and np.array_equal(self.branches, other.branches)
        )


def _draw_layer_levels(rng: np.random.Generator, count: int, top_l: int, ml: float) -> np.ndarray:
    """Exponential level rule: floor(-log(u) * ml) clipped to [0, top_l-1]."""
    u = rng.random(count)
    with np.errstate(divide="ignore"):
        levels = np.floor(-np.log(u) * ml)
    return np.clip(levels, 0, top_l - 1).astype(np.int32)


def assign_layers(
    normalized_lids, top_l: int, ml: float, rng_seed: int, branches: int = 2
) -> LayerAssignment:
    """Place nodes on layers and branches, highest normalized LID first.

    Expected per-layer sizes are drawn up front for each branch with the
    exponential level rule (one Philox stream, branch 0 first). Nodes are
    then walked in descending-LID order (ties by ascending index),
    alternating branches, and each lands on the highest layer of its
    branch that still has capacity. When one branch fills, the remainder
    goes to the other.
    """
    lids = np.asarray(normalized_lids, dtype=np.float64)
    n = lids.size
    if top_l < 1:
        raise InputError("top_l must be >= 1")
    if ml <= 0:
        raise InputError("ml must be positive")
    if branches not in (1, 2):
        raise InputError("branches must be 1 or 2")
    sizes = [n] if branches == 1 else [math.ceil(n / 2), n // 2]
    rng = np.random.Generator(np.random.Philox(rng_seed))
    expected = np.zeros((branches, top_l), dtype=np.int64)
    for b in range(branches):
        drawn = _draw_layer_levels(rng, sizes[b], top_l, ml)
        expected[b] = np.bincount(drawn, minlength=top_l)
    order = np.argsort(-lids, kind="stable")
    layers = np.empty(n, dtype=np.int32)
    out_branch = np.empty(n, dtype=np.int8)
    filled = np.zeros_like(expected)
    assigned = [0] * branches
    current = 0
    for idx in order:
        b = current
        if assigned[b] == sizes[b]:
            b = 1 - b
        for layer in range(top_l - 1, -1, -1):
            if filled[b, layer] < expected[b, layer]:
                layers[idx] = layer
                out_branch[idx] = b
                filled[b, layer] += 1
                assigned[b] += 1
                break
        if branches == 2:
            current = 1 - current
    return LayerAssignment(layers, out_branch, branches, expected)


def random_assignment(
    n: int, top_l: int, ml: float, rng_seed: int, branches: int = 1
) -> LayerAssignment:
    """Layer placement without LID ordering: one independent level draw per
    node in dataset order, branches alternating by node index."""
    if n < 1:
        raise InputError("n must be >= 1")
    if top_l < 1:
        raise InputError("top_l must be >= 1")
    if ml <= 0:
        raise InputError("ml must be positive")
    if branches not in (1, 2):
        raise InputError("branches must be 1 or 2")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    layers = _draw_layer_levels(rng, n, top_l, ml)
    out_branch = (np.arange(n) % branches).astype(np.int8)
    expected = np.zeros((branches, top_l), dtype=np.int64)
    for b in range(branches):
        expected[b] = np.bincount(layers[out_branch == b], minlength=top_l)
    return LayerAssignment(layers, out_branch, branches, expected)
