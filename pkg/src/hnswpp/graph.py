"""Layered dual-branch navigable small world index.

One shared base layer holds every inserted node; one or two branch
hierarchies of sparser upper layers route searches into it. Queries
descend each branch greedily, may jump straight to the base layer when
the skip predicate fires on a high-LID entry point, and merge the two
disjoint base-layer result sets into a single top-k answer.

Distances are squared L2 internally (monotone with L2, no square root in
the hot loop); every distance that leaves this module is true L2. The
base-layer beam is JIT-compiled when numba is importable and runs as
plain (slow) Python otherwise.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    EmptyIndexError,
    ExcludeSetExhausted,
    InputError,
)
from .lid import LayerAssignment, LidProfile, assign_layers, random_assignment

logger = logging.getLogger("hnswpp")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


VARIANTS = ("basic", "multi_branch", "lid_based", "full")
DUAL_VARIANTS = frozenset({"multi_branch", "full"})
LID_ORDERED_VARIANTS = frozenset({"lid_based", "full"})

_EMPTY_I32 = np.empty(0, dtype=np.int32)
_EMPTY_I64 = np.empty(0, dtype=np.int64)
_UNSET = object()


@dataclass
class IndexConfig:
    """Build and query parameters; also selects the index variant.

    m / m0 cap node degrees on upper layers / the base layer,
    ef_construction and ef_search size the dynamic candidate beams,
    top_l bounds the layer count and ml scales the exponential level
    rule (default 1/ln(m)). lid_threshold of None disables skip bridges;
    distance_epsilon may be a literal distance or "auto" for the
    dataset's estimated average pairwise distance. When
    skip_distance_check is False the skip predicate tests only the LID
    clause (lid >= threshold) instead of both clauses.
    """

    m: int = 16
    m0: int | None = None
    ef_construction: int = 128
    ef_search: int = 64
    top_l: int = 4
    ml: float | None = None
    lid_threshold: float | None = None
    distance_epsilon: float | str = "auto"
    variant: str = "basic"
    rng_seed: int = 0
    skip_distance_check: bool = True

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.m0 is None:
            self.m0 = 2 * self.m
        if self.m0 < self.m:
            raise ConfigError(f"m0={self.m0} must be >= m={self.m}")
        if self.ef_construction < self.m:
            raise ConfigError(f"ef_construction={self.ef_construction} must be >= m={self.m}")
        if self.ef_search < 1:
            raise ConfigError("ef_search must be >= 1")
        if self.top_l < 1:
            raise ConfigError("top_l must be >= 1")
        if self.ml is None:
            if self.m < 2:
                raise ConfigError("ml must be given explicitly when m < 2")
            self.ml = 1.0 / math.log(self.m)
        if self.ml <= 0:
            raise ConfigError("ml must be positive")
        if self.lid_threshold is not None and not 0.0 <= self.lid_threshold <= 1.0:
            raise ConfigError(f"lid_threshold must lie in [0,1], got {self.lid_threshold}")
        if isinstance(self.distance_epsilon, str):
            if self.distance_epsilon != "auto":
                raise ConfigError("distance_epsilon must be a positive number or 'auto'")
        elif self.distance_epsilon <= 0:
            raise ConfigError("distance_epsilon must be positive")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    @property
    def n_branches(self) -> int:
        return 2 if self.variant in DUAL_VARIANTS else 1

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "m0": self.m0,
            "ef_construction": self.ef_construction,
            "ef_search": self.ef_search,
            "top_l": self.top_l,
            "ml": self.ml,
            "lid_threshold": self.lid_threshold,
            "distance_epsilon": self.distance_epsilon,
            "variant": self.variant,
            "rng_seed": self.rng_seed,
            "skip_distance_check": self.skip_distance_check,
        }


@dataclass
class BranchHierarchy:
    """Upper layers of one branch: adjacency per layer plus the entry point.

    The entry point is the first node ever inserted at the branch's
    maximum occupied layer; it changes only when a later node occupies a
    strictly higher layer.
    """

    layers: dict[int, dict[int, np.ndarray]] = field(default_factory=dict)
    entry_point: int | None = None
    entry_layer: int = -1


@dataclass
class SearchOutcome:
    """Merged top-k answer plus per-query diagnostics."""

    neighbors: list[tuple[int, float]]  # (label, L2 distance), ascending
    skip_count: int
    w1: tuple[int, ...]  # branch-0 base-layer results before merging
    w2: tuple[int, ...]  # branch-1 results; empty for single-branch variants
    hops: int  # candidate expansions across all layers


# --------------------------------------------------------------------------
# Best-first beam over the base layer (matrix adjacency). JIT-compiled.
# Heaps order by (distance, label) so equal distances resolve to the
# lower label deterministically.
# --------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _lex_less(d1, l1, d2, l2):
    return d1 < d2 or (d1 == d2 and l1 < l2)


@njit(cache=True, inline="always")
def _lex_greater(d1, l1, d2, l2):
    return d1 > d2 or (d1 == d2 and l1 > l2)


@njit(cache=True)
def _push_min(hd, hl, size, d, l):
    i = size
    hd[i] = d
    hl[i] = l
    while i > 0:
        p = (i - 1) >> 1
        if _lex_less(hd[i], hl[i], hd[p], hl[p]):
            hd[i], hd[p] = hd[p], hd[i]
            hl[i], hl[p] = hl[p], hl[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _pop_min(hd, hl, size):
    size -= 1
    hd[0] = hd[size]
    hl[0] = hl[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        best = i
        if left < size and _lex_less(hd[left], hl[left], hd[best], hl[best]):
            best = left
        if right < size and _lex_less(hd[right], hl[right], hd[best], hl[best]):
            best = right
        if best == i:
            break
        hd[i], hd[best] = hd[best], hd[i]
        hl[i], hl[best] = hl[best], hl[i]
        i = best
    return size


@njit(cache=True)
def _push_max(hd, hl, size, d, l):
    i = size
    hd[i] = d
    hl[i] = l
    while i > 0:
        p = (i - 1) >> 1
        if _lex_greater(hd[i], hl[i], hd[p], hl[p]):
            hd[i], hd[p] = hd[p], hd[i]
            hl[i], hl[p] = hl[p], hl[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _pop_max(hd, hl, size):
    size -= 1
    hd[0] = hd[size]
    hl[0] = hl[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        best = i
        if left < size and _lex_greater(hd[left], hl[left], hd[best], hl[best]):
            best = left
        if right < size and _lex_greater(hd[right], hl[right], hd[best], hl[best]):
            best = right
        if best == i:
            break
        hd[i], hd[best] = hd[best], hd[i]
        hl[i], hl[best] = hl[best], hl[i]
        i = best
    return size


@njit(cache=True, nogil=True)
def _beam_base_kernel(vecs, adj, deg, q, entries, ef, exclude):
    """Best-first expansion at the base layer.

    Returns (distances, labels, hops) with squared f64 distances sorted
    ascending by (distance, label). Excluded labels are never visited.
    """
    n = vecs.shape[0]
    dim = vecs.shape[1]
    visited = np.zeros(n, dtype=np.uint8)
    for t in range(exclude.shape[0]):
        visited[exclude[t]] = 1

    cand_d = np.empty(n + entries.shape[0] + 1, dtype=np.float64)
    cand_l = np.empty(n + entries.shape[0] + 1, dtype=np.int64)
    csize = 0
    res_d = np.empty(ef + 1, dtype=np.float64)
    res_l = np.empty(ef + 1, dtype=np.int64)
    rsize = 0

    for t in range(entries.shape[0]):
        e = entries[t]
        if visited[e] == 1:
            continue
        visited[e] = 1
        d = 0.0
        for j in range(dim):
            diff = np.float64(vecs[e, j]) - q[j]
            d += diff * diff
        csize = _push_min(cand_d, cand_l, csize, d, e)
        rsize = _push_max(res_d, res_l, rsize, d, e)
        if rsize > ef:
            rsize = _pop_max(res_d, res_l, rsize)

    hops = 0
    while csize > 0:
        cd = cand_d[0]
        cl = cand_l[0]
        csize = _pop_min(cand_d, cand_l, csize)
        if cd > res_d[0]:
            break
        hops += 1
        for t in range(deg[cl]):
            e = adj[cl, t]
            if visited[e] == 1:
                continue
            visited[e] = 1
            d = 0.0
            for j in range(dim):
                diff = np.float64(vecs[e, j]) - q[j]
                d += diff * diff
            if d < res_d[0] or rsize < ef:
                csize = _push_min(cand_d, cand_l, csize, d, e)
                rsize = _push_max(res_d, res_l, rsize, d, e)
                if rsize > ef:
                    rsize = _pop_max(res_d, res_l, rsize)

    out_d = np.empty(rsize, dtype=np.float64)
    out_l = np.empty(rsize, dtype=np.int64)
    i = rsize - 1
    while rsize > 0:
        out_d[i] = res_d[0]
        out_l[i] = res_l[0]
        rsize = _pop_max(res_d, res_l, rsize)
        i -= 1
    return out_d, out_l, hops


@njit(cache=True, nogil=True)
def _link_base_kernel(vecs, adj, deg, label, selected, cap):
    """Directed base-layer linking: the new node keeps its outgoing links;
    an overflowing neighbor keeps its closest cap out-edges, ties to the
    lower label."""
    k = selected.shape[0]
    dim = vecs.shape[1]
    for t in range(k):
        adj[label, t] = selected[t]
    deg[label] = k
    for t in range(k):
        p = selected[t]
        dp = deg[p]
        if dp < cap:
            adj[p, dp] = label
            deg[p] = dp + 1
            continue
        nc = dp + 1
        cand_d = np.empty(nc, dtype=np.float64)
        cand_l = np.empty(nc, dtype=np.int64)
        for i in range(dp):
            cand_l[i] = adj[p, i]
        cand_l[dp] = label
        for i in range(nc):
            e = cand_l[i]
            d = 0.0
            for j in range(dim):
                diff = np.float64(vecs[e, j]) - np.float64(vecs[p, j])
                d += diff * diff
            cand_d[i] = d
        # insertion sort ascending by (distance, label)
        for i in range(1, nc):
            dv = cand_d[i]
            lv = cand_l[i]
            j = i - 1
            while j >= 0 and (cand_d[j] > dv or (cand_d[j] == dv and cand_l[j] > lv)):
                cand_d[j + 1] = cand_d[j]
                cand_l[j + 1] = cand_l[j]
                j -= 1
            cand_d[j + 1] = dv
            cand_l[j + 1] = lv
        for i in range(cap):
            adj[p, i] = cand_l[i]
        deg[p] = cap


def _beam_dict(vectors, layer_map, q64, entries, ef, capacity):
    """Best-first expansion over dict adjacency (upper layers).

    Same contract as the base kernel: squared f64 distances, ascending by
    (distance, label), plus the expansion count.
    """
    visited = np.zeros(capacity, dtype=bool)
    cand: list[tuple[float, int]] = []
    res: list[tuple[float, int]] = []  # (-d, -label) so heap[0] is the worst
    for e in entries:
        if visited[e]:
            continue
        visited[e] = True
        diff = vectors[e].astype(np.float64) - q64
        d = float(diff @ diff)
        heapq.heappush(cand, (d, e))
        heapq.heappush(res, (-d, -e))
        if len(res) > ef:
            heapq.heappop(res)
    hops = 0
    while cand:
        cd, cl = heapq.heappop(cand)
        if cd > -res[0][0]:
            break
        hops += 1
        nbrs = layer_map.get(cl)
        if nbrs is None or nbrs.size == 0:
            continue
        fresh = nbrs[~visited[nbrs]]
        if fresh.size == 0:
            continue
        visited[fresh] = True
        diffs = vectors[fresh].astype(np.float64) - q64
        dists = np.einsum("ij,ij->i", diffs, diffs)
        worst = -res[0][0]
        for d, e in zip(dists.tolist(), fresh.tolist()):
            if d < worst or len(res) < ef:
                heapq.heappush(cand, (d, e))
                heapq.heappush(res, (-d, -e))
                if len(res) > ef:
                    heapq.heappop(res)
                worst = -res[0][0]
    out = sorted((-nd, -nl) for nd, nl in res)
    return out, hops


def merge_topk(w1, w2, q, k: int, vectors: np.ndarray) -> list[tuple[int, float]]:
    """Top-k of w1 and w2 combined, ascending by (true L2 distance, label).

    Duplicates are collapsed; fewer than k candidates yield them all.
    """
    labels = np.fromiter(set(w1) | set(w2), dtype=np.int64)
    if labels.size == 0:
        return []
    q64 = np.asarray(q, dtype=np.float64)
    diffs = vectors[labels].astype(np.float64) - q64
    d2 = np.einsum("ij,ij->i", diffs, diffs)
    order = np.lexsort((labels, d2))[: min(k, labels.size)]
    return [(int(labels[i]), float(math.sqrt(d2[i]))) for i in order]


def jump(ep: int, q, profile: LidProfile, threshold: float, epsilon: float, vectors) -> bool:
    """Skip-bridge predicate: may the search drop straight to the base layer.

    True when the entry point's normalized LID strictly exceeds the
    threshold and it lies strictly within epsilon of the query.
    """
    if profile is None:
        raise InputError("jump needs a LID profile")
    if not 0 <= ep < len(profile.normalized_lids):
        raise InputError(f"node {ep} has no LID recorded in the profile")
    lid = float(profile.normalized_lids[ep])
    diff = np.asarray(vectors[ep], dtype=np.float64) - np.asarray(q, dtype=np.float64)
    dist = float(np.sqrt(diff @ diff))
    return lid > threshold and dist < epsilon


class HnswIndex:
    """The layered graph index. Single-writer construction, then immutable.

    Labels must be dense integers 0..n-1 where n is the size of the
    layer assignment used during construction; inserting in any order is
    allowed. Once any query has run, no further mutation is supported.
    """

    def __init__(self, dim: int, config: IndexConfig, profile: LidProfile | None = None):
        if dim < 1:
            raise InputError("dim must be >= 1")
        if config.variant in LID_ORDERED_VARIANTS and profile is None:
            raise InputError(f"variant {config.variant!r} requires a LID profile")
        self.dim = dim
        self.config = config
        self.profile = profile
        self.branches = [BranchHierarchy() for _ in range(config.n_branches)]
        self.capacity: int | None = None
        self.count = 0
        self._vectors: np.ndarray | None = None
        self._base_adj: np.ndarray | None = None
        self._base_deg: np.ndarray | None = None
        self.node_layers: np.ndarray | None = None
        self.node_branches: np.ndarray | None = None
        self._base_entry: int | None = None  # first node ever inserted

    @property
    def vectors(self) -> np.ndarray:
        """The vector store, indexed by label (read-only view).

        Rows for labels not yet inserted are zero until construction
        completes.
        """
        if self._vectors is None:
            return np.empty((0, self.dim), dtype=np.float32)
        view = self._vectors[:]
        view.flags.writeable = False
        return view

    # -- construction ------------------------------------------------------

    def _bind(self, capacity: int) -> None:
        self.capacity = capacity
        self._vectors = np.zeros((capacity, self.dim), dtype=np.float32)
        self._base_adj = np.zeros((capacity, self.config.m0), dtype=np.int32)
        self._base_deg = np.zeros(capacity, dtype=np.int32)
        self.node_layers = np.full(capacity, -1, dtype=np.int16)
        self.node_branches = np.full(capacity, -1, dtype=np.int8)

    def insert(self, q, label: int, assignment: LayerAssignment) -> None:
        """Insert one vector under its pre-computed (layer, branch) placement.

        The node is connected in its branch from its assigned layer down
        to layer 1 and in the shared base layer, with an ef_construction
        candidate search at every touched layer; neighbors pushed past
        their degree cap are pruned back to their closest links.
        """
        if assignment is None:
            raise InputError("insert requires a layer assignment")
        vec = np.asarray(q, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.dim:
            raise InputError(f"vector dimension {vec.shape[0]} does not match index dim {self.dim}")
        if self.capacity is None:
            self._bind(len(assignment))
        elif len(assignment) != self.capacity:
            raise InputError("assignment size differs from the one this index was built with")
        if not 0 <= label < self.capacity:
            raise InputError(f"label {label} is not covered by the assignment")
        if self.node_layers[label] >= 0:
            raise InputError(f"label {label} already inserted")

        cfg = self.config
        layer = int(assignment.layers[label])
        branch_i = int(assignment.branches[label])
        if layer >= cfg.top_l:
            raise InputError(f"assigned layer {layer} exceeds top_l={cfg.top_l}")
        if branch_i >= len(self.branches):
            raise InputError(
                f"assignment places label {label} on branch {branch_i} "
                f"but variant {cfg.variant!r} has {len(self.branches)} branch(es)"
            )

        self._vectors[label] = vec
        q64 = self._vectors[label].astype(np.float64)
        branch = self.branches[branch_i]

        # Register the node on every branch layer it occupies.
        for lc in range(layer, 0, -1):
            branch.layers.setdefault(lc, {})[label] = _EMPTY_I32

        closest = None
        if branch.entry_point is not None:
            ep = branch.entry_point
            lc = branch.entry_layer
            while lc > layer and lc >= 1:
                found, _ = _beam_dict(
                    self._vectors, branch.layers[lc], q64, [ep], 1, self.capacity
                )
                ep = found[0][1]
                lc -= 1
            for lc in range(min(branch.entry_layer, layer), 0, -1):
                found, _ = _beam_dict(
                    self._vectors, branch.layers[lc], q64, [ep], cfg.ef_construction, self.capacity
                )
                self._link_upper(branch.layers[lc], label, [l for _, l in found[: cfg.m]])
                ep = found[0][1]
            closest = ep

        if self.count > 0:
            base_ep = closest if closest is not None else self._base_entry
            out_d, out_l, _ = _beam_base_kernel(
                self._vectors,
                self._base_adj,
                self._base_deg,
                q64,
                np.asarray([base_ep], dtype=np.int64),
                cfg.ef_construction,
                _EMPTY_I64,
            )
            self._link_base(label, out_l[: cfg.m0])
        else:
            self._base_entry = label

        if branch.entry_point is None or layer > branch.entry_layer:
            branch.entry_point = label
            branch.entry_layer = layer
        self.node_layers[label] = layer
        self.node_branches[label] = branch_i
        self.count += 1

    def _prune_order(self, center: int, candidates: np.ndarray) -> np.ndarray:
        """Candidates sorted ascending by (distance to center, label)."""
        diffs = self._vectors[candidates].astype(np.float64) - self._vectors[center].astype(
            np.float64
        )
        d2 = np.einsum("ij,ij->i", diffs, diffs)
        return candidates[np.lexsort((candidates, d2))]

    def _link_upper(self, layer_map: dict, label: int, selected: list[int]) -> None:
        cap = self.config.m
        layer_map[label] = np.asarray(selected, dtype=np.int32)
        for p in selected:
            row = layer_map[p]
            row = np.append(row, np.int32(label))
            if row.size > cap:
                keep = self._prune_order(p, row.astype(np.int64))[:cap].astype(np.int32)
                dropped = set(row.tolist()) - set(keep.tolist())
                row = keep
                for dr in dropped:
                    other = layer_map[dr]
                    layer_map[dr] = other[other != p]
            layer_map[p] = row

    def _link_base(self, label: int, selected: np.ndarray) -> None:
        # Base-layer edges are directed: the new node always keeps its
        # outgoing links, and an overflowing neighbor prunes only its own
        # out-list back to its closest m0. Nodes therefore never drop to
        # degree zero once another node exists.
        _link_base_kernel(
            self._vectors,
            self._base_adj,
            self._base_deg,
            label,
            np.asarray(selected, dtype=np.int64),
            self.config.m0,
        )

    # -- queries -----------------------------------------------------------

    def _resolve_epsilon(self) -> float:
        eps = self.config.distance_epsilon
        if isinstance(eps, str):
            if self.profile is None:
                raise InputError(
                    "distance_epsilon='auto' needs a LID profile carrying the dataset "
                    "average distance"
                )
            return float(self.profile.avg_distance)
        return float(eps)

    def _resolve_threshold(self, lid_threshold):
        if lid_threshold is _UNSET:
            thr = self.config.lid_threshold if self.config.variant == "full" else None
        else:
            thr = lid_threshold
        if thr is not None and self.profile is None:
            raise InputError("skip bridges need a LID profile; build or load one first")
        return thr

    def _skip_fires(self, nearest_label: int, q64: np.ndarray, thr: float, eps: float) -> bool:
        if self.config.skip_distance_check:
            return jump(nearest_label, q64, self.profile, thr, eps, self._vectors)
        return float(self.profile.normalized_lids[nearest_label]) >= thr

    def search(self, q, k: int, ef_search: int | None = None, lid_threshold=_UNSET) -> SearchOutcome:
        """Top-k neighbors of q with per-query diagnostics.

        Descends every branch greedily, jumping a branch straight to the
        base layer when the skip predicate fires. Branch 0's base-layer
        results are handed to branch 1 as an exclude set, so the two
        result sets are disjoint before merging. lid_threshold overrides
        the config at query time (None disables skips); by default only
        the "full" variant skips.
        """
        if self.count == 0:
            raise EmptyIndexError("cannot search an empty index")
        if k < 1:
            raise InputError("k must be >= 1")
        ef = self.config.ef_search if ef_search is None else ef_search
        if ef < 1:
            raise InputError("ef_search must be >= 1")
        if k > ef:
            raise InputError(f"k={k} exceeds ef_search={ef}; raise ef_search")
        vec = np.asarray(q, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.dim:
            raise InputError(f"query dimension {vec.shape[0]} does not match index dim {self.dim}")
        thr = self._resolve_threshold(lid_threshold)
        eps = self._resolve_epsilon() if thr is not None and self.config.skip_distance_check else None
        q64 = vec.astype(np.float64)

        hops = 0
        skip_count = 0
        layer0_entries: list[int | None] = []
        for branch in self.branches:
            if branch.entry_point is None:
                layer0_entries.append(None)
                continue
            ep = branch.entry_point
            lc = branch.entry_layer
            while lc >= 1:
                found, h = _beam_dict(self._vectors, branch.layers[lc], q64, [ep], 1, self.capacity)
                hops += h
                ep = found[0][1]
                if thr is not None and self._skip_fires(ep, q64, thr, eps):
                    skip_count += 1
                    break
                lc -= 1
            layer0_entries.append(ep)

        w1: tuple[int, ...] = ()
        exclude = _EMPTY_I64
        if layer0_entries[0] is not None:
            out_d, out_l, h = _beam_base_kernel(
                self._vectors,
                self._base_adj,
                self._base_deg,
                q64,
                np.asarray([layer0_entries[0]], dtype=np.int64),
                ef,
                _EMPTY_I64,
            )
            hops += h
            w1 = tuple(out_l.tolist())
            exclude = out_l

        w2: tuple[int, ...] = ()
        if len(self.branches) == 2 and layer0_entries[1] is not None:
            ep1 = layer0_entries[1]
            try:
                if ep1 in set(w1):
                    ep1 = self._replace_excluded_entry(q64, [ep1], 0, 1, set(w1))
                out2_d, out2_l, h = _beam_base_kernel(
                    self._vectors,
                    self._base_adj,
                    self._base_deg,
                    q64,
                    np.asarray([ep1], dtype=np.int64),
                    ef,
                    exclude,
                )
                hops += h
                w2 = tuple(out2_l.tolist())
            except ExcludeSetExhausted:
                # Branch 0 already holds every reachable node; nothing new to add.
                w2 = ()

        neighbors = merge_topk(w1, w2, q64, k, self._vectors)
        return SearchOutcome(neighbors=neighbors, skip_count=skip_count, w1=w1, w2=w2, hops=hops)

    def _neighbors_at(self, label: int, layer: int, branch: int) -> np.ndarray:
        if layer == 0:
            return self._base_adj[label, : self._base_deg[label]]
        return self.branches[branch].layers.get(layer, {}).get(label, _EMPTY_I32)

    def _replace_excluded_entry(self, q64, starts, layer, branch, excluded: set) -> int:
        """Breadth-first probe for the nearest entry outside the exclude set.

        Probing is capped at one full pass of the layer; running out of
        frontier raises ExcludeSetExhausted.
        """
        visited = set(starts)
        frontier = list(starts)
        while frontier:
            nxt = set()
            for c in frontier:
                for e in self._neighbors_at(c, layer, branch).tolist():
                    if e not in visited:
                        nxt.add(e)
            visited |= nxt
            usable = [e for e in nxt if e not in excluded]
            if usable:
                arr = np.asarray(usable, dtype=np.int64)
                diffs = self._vectors[arr].astype(np.float64) - q64
                d2 = np.einsum("ij,ij->i", diffs, diffs)
                return int(arr[np.lexsort((arr, d2))[0]])
            frontier = sorted(nxt)
        raise ExcludeSetExhausted(
            "breadth-first probing covered the layer without leaving the exclude set"
        )

    def search_layer(
        self, q, entry, ef: int, layer: int, branch: int = 0, exclude_set=(), lid_threshold=None
    ) -> tuple[list[tuple[int, float]], bool]:
        """Candidate search on a single layer.

        Returns (W, skip): up to ef (label, L2 distance) pairs ascending
        by distance, and whether the skip predicate fired on the nearest
        result. Members of exclude_set are never visited nor returned;
        an excluded entry point is replaced by breadth-first probing.
        """
        if self.count == 0:
            raise EmptyIndexError("cannot search an empty index")
        if ef < 1:
            raise InputError("ef must be >= 1")
        if not 0 <= layer < self.config.top_l:
            raise InputError(f"layer {layer} out of range")
        if not 0 <= branch < len(self.branches):
            raise InputError(f"branch {branch} out of range")
        entries = [int(e) for e in entry]
        if not entries:
            raise InputError("entry set must be non-empty")
        excluded = {int(e) for e in exclude_set}
        if excluded and layer != 0:
            raise InputError("exclude sets apply only at the base layer")
        vec = np.asarray(q, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.dim:
            raise InputError(f"query dimension {vec.shape[0]} does not match index dim {self.dim}")
        q64 = vec.astype(np.float64)

        if layer == 0:
            for e in entries:
                if not (0 <= e < self.capacity) or self.node_layers[e] < 0:
                    raise InputError(f"entry label {e} is not present at layer 0")
        else:
            layer_map = self.branches[branch].layers.get(layer, {})
            for e in entries:
                if e not in layer_map:
                    raise InputError(f"entry label {e} is not present at layer {layer}")

        usable = [e for e in entries if e not in excluded]
        if not usable:
            usable = [self._replace_excluded_entry(q64, entries, layer, branch, excluded)]

        if layer == 0:
            out_d, out_l, _ = _beam_base_kernel(
                self._vectors,
                self._base_adj,
                self._base_deg,
                q64,
                np.asarray(usable, dtype=np.int64),
                ef,
                np.fromiter(excluded, dtype=np.int64) if excluded else _EMPTY_I64,
            )
            found = list(zip(out_d.tolist(), out_l.tolist()))
        else:
            found, _ = _beam_dict(
                self._vectors, self.branches[branch].layers[layer], q64, usable, ef, self.capacity
            )

        skip = False
        if lid_threshold is not None:
            if self.profile is None:
                raise InputError("skip evaluation needs a LID profile")
            eps = self._resolve_epsilon() if self.config.skip_distance_check else None
            skip = self._skip_fires(found[0][1], q64, lid_threshold, eps)
        return [(label, math.sqrt(d)) for d, label in found], skip

    # -- validation --------------------------------------------------------

    def check_invariants(self) -> list[str]:
        """Structural self-checks; returns human-readable violations.

        Base-layer connectivity is not guaranteed by construction, so a
        disconnected graph is logged as a warning rather than reported.
        """
        v: list[str] = []
        if self.count == 0:
            return v
        cfg = self.config
        inserted = np.flatnonzero(self.node_layers >= 0)
        if inserted.size != self.count:
            v.append(f"count={self.count} but {inserted.size} labels present in base layer")

        # Base-layer adjacency is directed; only caps, dedup, and the
        # degree >= 1 floor apply there.
        for a in inserted.tolist():
            row = self._base_adj[a, : self._base_deg[a]]
            if row.size > cfg.m0:
                v.append(f"base degree {row.size} exceeds m0={cfg.m0} at node {a}")
            seen = set(row.tolist())
            if len(seen) != row.size:
                v.append(f"duplicate base edges at node {a}")
            if a in seen:
                v.append(f"self-loop in base layer at node {a}")
            if self.count >= 2 and row.size == 0:
                v.append(f"node {a} is isolated in the base layer")

        upper_sets = []
        for bi, branch in enumerate(self.branches):
            members = set()
            for layer, layer_map in branch.layers.items():
                for a, row in layer_map.items():
                    members.add(a)
                    if row.size > cfg.m:
                        v.append(f"branch {bi} layer {layer} degree {row.size} exceeds m={cfg.m}")
                    if self.node_branches[a] != bi:
                        v.append(f"node {a} appears in branch {bi} but is assigned elsewhere")
                    if self.node_layers[a] < layer:
                        v.append(f"node {a} appears above its assigned layer in branch {bi}")
                    seen = set(row.tolist())
                    if len(seen) != row.size:
                        v.append(f"duplicate edges at node {a}, branch {bi} layer {layer}")
                    if a in seen:
                        v.append(f"self-loop at node {a}, branch {bi} layer {layer}")
                    for b in row.tolist():
                        back = layer_map.get(b)
                        if back is None or a not in back:
                            v.append(f"asymmetric edge {a}->{b} in branch {bi} layer {layer}")
            for a in members:
                for lc in range(1, int(self.node_layers[a]) + 1):
                    if a not in branch.layers.get(lc, {}):
                        v.append(f"node {a} missing from branch {bi} layer {lc}")
            if branch.entry_point is not None and branch.layers:
                top = max(layer for layer, lm in branch.layers.items() if lm)
                if branch.entry_point not in branch.layers.get(top, {}):
                    v.append(f"branch {bi} entry point is not on its highest occupied layer")
            upper_sets.append(members)

        if len(self.branches) == 2:
            overlap = upper_sets[0] & upper_sets[1]
            if overlap:
                v.append(f"upper layers of both branches share nodes: {sorted(overlap)[:5]}")
            expected_up = {int(a) for a in inserted.tolist() if self.node_layers[a] > 0}
            if upper_sets[0] | upper_sets[1] != expected_up:
                v.append("upper-layer membership does not match assigned layers")
            sizes = [int((self.node_branches[inserted] == b).sum()) for b in (0, 1)]
            if abs(sizes[0] - sizes[1]) > 1 or (
                self.count == self.capacity
                and sizes != [math.ceil(self.count / 2), self.count // 2]
            ):
                v.append(f"branch sizes {sizes} violate the even split")

        if not v and self.count >= 2:
            reached = self._reachable_from_entries()
            if reached < self.count:
                logger.warning(
                    "base layer is not fully connected: %d of %d nodes reachable",
                    reached,
                    self.count,
                )
        return v

    def _reachable_from_entries(self) -> int:
        seen = np.zeros(self.capacity, dtype=bool)
        stack = [b.entry_point for b in self.branches if b.entry_point is not None]
        for s in stack:
            seen[s] = True
        while stack:
            c = stack.pop()
            for e in self._base_adj[c, : self._base_deg[c]].tolist():
                if not seen[e]:
                    seen[e] = True
                    stack.append(e)
        return int(seen.sum())


def build_index(vectors, config: IndexConfig, profile: LidProfile | None = None) -> HnswIndex:
    """Construct an index over a full dataset.

    LID-ordered variants require a profile: nodes are placed by
    descending normalized LID and inserted in that order, alternating
    branches. The other variants draw layers independently per node and
    insert in dataset order. Identical seeds and inputs rebuild an
    identical graph.
    """
    data = np.ascontiguousarray(vectors, dtype=np.float32)
    if data.ndim != 2 or data.shape[0] < 1:
        raise InputError("vectors must be a non-empty 2d array")
    n = data.shape[0]
    if config.variant in LID_ORDERED_VARIANTS:
        if profile is None:
            raise InputError(f"variant {config.variant!r} requires a LID profile")
        if len(profile) != n:
            raise InputError(f"profile covers {len(profile)} nodes but dataset has {n}")
        assignment = assign_layers(
            profile.normalized_lids, config.top_l, config.ml, config.rng_seed, config.n_branches
        )
        order = np.argsort(-profile.normalized_lids, kind="stable")
    else:
        assignment = random_assignment(n, config.top_l, config.ml, config.rng_seed, config.n_branches)
        order = np.arange(n)
    index = HnswIndex(data.shape[1], config, profile=profile)
    for label in order.tolist():
        index.insert(data[label], int(label), assignment)
    return index
