"""Dataset ingestion, synthetic generation, and persistence.

Binary vector files use the fvecs/bvecs convention: each record is a
little-endian u32 dimension followed by that many float32 (fvecs) or u8
(bvecs) components. Ground truth pairs an ivecs-style label block with a
parallel fvecs-style distance block plus a one-line checksum sidecar.
Index snapshots are a self-describing binary layout with magic bytes.
Every loader either returns data or raises FormatError naming the byte
offset or line of the problem. All randomness here flows through numpy's
Philox bit generator (the counter-based Philox 4x64-10 with numpy's
default key schedule), so synthetic datasets are byte-identical across
platforms for a fixed seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .graph import VARIANTS, HnswIndex, IndexConfig
from .lid import LayerAssignment, LidProfile
from .oracle import GroundTruth

SNAPSHOT_MAGIC = b"HNSWPP1\x00"
_VARIANT_TAGS = {name: i for i, name in enumerate(VARIANTS)}


# --------------------------------------------------------------------------
# fvecs / bvecs
# --------------------------------------------------------------------------


def _scan_records(raw: bytes, component_size: int, path) -> None:
    """Walk records sequentially to pinpoint the first malformed offset."""
    offset = 0
    dim = None
    while offset < len(raw):
        if offset + 4 > len(raw):
            raise FormatError(f"{path}: truncated record header at byte {offset}")
        (d,) = struct.unpack_from("<I", raw, offset)
        if d == 0:
            raise FormatError(f"{path}: zero dimension in record header at byte {offset}")
        if dim is None:
            dim = d
        elif d != dim:
            raise FormatError(
                f"{path}: inconsistent dimension {d} (expected {dim}) at byte {offset}"
            )
        offset += 4
        if offset + d * component_size > len(raw):
            raise FormatError(f"{path}: truncated record body at byte {offset}")
        offset += d * component_size


def _load_vecs(path, component_size: int, dtype) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) == 0:
        return np.empty((0, 0), dtype=np.float32)
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated record header at byte 0")
    (dim,) = struct.unpack_from("<I", raw, 0)
    if dim == 0:
        raise FormatError(f"{path}: zero dimension in record header at byte 0")
    record = 4 + dim * component_size
    if len(raw) % record != 0:
        _scan_records(raw, component_size, path)  # raises with the exact offset
        raise FormatError(f"{path}: file length {len(raw)} is not a whole number of records")
    n = len(raw) // record
    header_dtype = np.dtype([("dim", "<u4"), ("data", dtype, (dim,))])
    records = np.frombuffer(raw, dtype=header_dtype, count=n)
    if not np.all(records["dim"] == dim):
        _scan_records(raw, component_size, path)
    return records["data"].astype(np.float32)


def load_fvecs(path) -> np.ndarray:
    """Vectors from an fvecs file as a float32 (n, dim) array."""
    return _load_vecs(path, 4, "<f4")


def load_bvecs(path) -> np.ndarray:
    """Vectors from a bvecs file, u8 components widened to float32."""
    return _load_vecs(path, 1, "u1")


def _write_vecs(path, arr: np.ndarray, dtype) -> None:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise InputError("expected a 2d array of vectors")
    n, dim = arr.shape
    out = np.empty(n, dtype=np.dtype([("dim", "<u4"), ("data", dtype, (dim,))]))
    out["dim"] = dim
    out["data"] = arr
    Path(path).write_bytes(out.tobytes())


def write_fvecs(path, arr) -> None:
    _write_vecs(path, np.asarray(arr, dtype=np.float32), "<f4")


def write_bvecs(path, arr) -> None:
    arr = np.asarray(arr)
    if arr.size and (arr.min() < 0 or arr.max() > 255 or np.any(arr != np.floor(arr))):
        raise InputError("bvecs components must be integers in [0, 255]")
    _write_vecs(path, arr.astype("u1"), "u1")


# --------------------------------------------------------------------------
# Synthetic datasets
# --------------------------------------------------------------------------


def generate_synthetic(
    kind: str, dim: int, n: int, seed: int, clusters: int = 16, spread: float = 0.12
) -> np.ndarray:
    """Seed-deterministic synthetic vectors.

    "uniform" draws i.i.d. uniform in [0,1]^dim. "gaussian" draws cluster
    centers uniform in the unit cube, assigns each point a random
    cluster, and adds isotropic normal noise with the given spread.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if dim < 1:
        raise InputError("dim must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    if kind == "uniform":
        return rng.random((n, dim)).astype(np.float32)
    if kind == "gaussian":
        if clusters < 1:
            raise InputError("clusters must be >= 1")
        centers = rng.random((clusters, dim))
        idx = rng.integers(0, clusters, size=n)
        return (centers[idx] + rng.normal(0.0, spread, size=(n, dim))).astype(np.float32)
    raise InputError(f"unknown synthetic kind {kind!r}")


@dataclass
class DatasetSpec:
    """Where a benchmark dataset comes from and how it splits.

    source is either a vector file path or a synthetic kind ("uniform" /
    "gaussian"). The first base_count vectors build the index, the next
    query_count are held out for inference.
    """

    source: str
    dim: int = 0  # required for synthetic sources; ignored for files
    base_count: int = 10_000
    query_count: int = 1_000
    seed: int = 42
    clusters: int = 16
    spread: float = 0.12

    @property
    def dataset_id(self) -> str:
        if self.source in ("uniform", "gaussian"):
            return f"{self.source}-d{self.dim}-n{self.base_count + self.query_count}-s{self.seed}"
        return Path(self.source).stem


# The desk-scale experimental protocol: 10,000 base + 1,000 inference
# points. Gaussian cluster count and spread are artifact-defined.
PRESETS = {
    "random": DatasetSpec(source="uniform", dim=100),
    "gaussian": DatasetSpec(source="gaussian", dim=12),
}


def dataset_preset(name: str, seed: int | None = None) -> DatasetSpec:
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    spec = PRESETS[name]
    return replace(spec, seed=seed) if seed is not None else replace(spec)


def load_dataset(spec: DatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    """(base, queries) per the spec's split, as float32 arrays."""
    total = spec.base_count + spec.query_count
    if spec.base_count < 1 or spec.query_count < 0:
        raise InputError("base_count must be >= 1 and query_count >= 0")
    if spec.source in ("uniform", "gaussian"):
        if spec.dim < 1:
            raise InputError("synthetic datasets need a positive dim")
        data = generate_synthetic(
            spec.source, spec.dim, total, spec.seed, spec.clusters, spec.spread
        )
    else:
        path = Path(spec.source)
        data = load_bvecs(path) if path.suffix == ".bvecs" else load_fvecs(path)
        if len(data) < total:
            raise InputError(
                f"{spec.source} holds {len(data)} vectors but the spec needs {total}"
            )
    return data[: spec.base_count], data[spec.base_count : total]


# --------------------------------------------------------------------------
# LID profile / layer assignment text formats
# --------------------------------------------------------------------------

_PROFILE_HEADER = "label,raw_lid,normalized_lid"
_ASSIGNMENT_HEADER = "label,layer,branch"


def _read_text_lines(path) -> list[str]:
    try:
        return Path(path).read_bytes().decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text file ({exc})") from exc


def save_profile(profile: LidProfile, path) -> None:
    lines = [_PROFILE_HEADER]
    for i in range(len(profile)):
        lines.append(f"{i},{float(profile.raw_lids[i])!r},{float(profile.normalized_lids[i])!r}")
    lines.append(f"#avg_distance={float(profile.avg_distance)!r}")
    lines.append(f"#k_used={profile.k_used}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_profile(path) -> LidProfile:
    lines = _read_text_lines(path)
    if not lines or lines[0] != _PROFILE_HEADER:
        raise FormatError(f"{path}: line 1 must be the header {_PROFILE_HEADER!r}")
    rows = {}
    avg_distance = None
    k_used = None
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key == "avg_distance":
                avg_distance = float(value)
            elif key == "k_used":
                k_used = int(value)
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}: line {ln}: expected 3 comma-separated fields")
        try:
            label, raw, norm = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise FormatError(f"{path}: line {ln}: {exc}") from exc
        if label in rows:
            raise FormatError(f"{path}: line {ln}: duplicate label {label}")
        rows[label] = (raw, norm)
    n = len(rows)
    if n == 0:
        raise FormatError(f"{path}: no profile rows found")
    if sorted(rows) != list(range(n)):
        raise FormatError(f"{path}: labels must cover 0..{n - 1} exactly")
    if avg_distance is None:
        raise FormatError(f"{path}: missing #avg_distance trailer")
    if k_used is None:
        raise FormatError(f"{path}: missing #k_used trailer")
    raw = np.array([rows[i][0] for i in range(n)], dtype=np.float64)
    norm = np.array([rows[i][1] for i in range(n)], dtype=np.float64)
    if norm.min() < 0 or norm.max() > 1:
        raise FormatError(f"{path}: normalized LIDs fall outside [0,1]")
    if not np.all(np.isfinite(raw)) or raw.min() <= 0:
        raise FormatError(f"{path}: raw LIDs must be finite and positive")
    return LidProfile(raw_lids=raw, normalized_lids=norm, k_used=k_used, avg_distance=avg_distance)


def save_assignment(assignment: LayerAssignment, path) -> None:
    lines = [_ASSIGNMENT_HEADER]
    for i in range(len(assignment)):
        lines.append(f"{i},{assignment.layers[i]},{assignment.branches[i]}")
    lines.append(f"#branches={assignment.n_branches}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_assignment(path) -> LayerAssignment:
    lines = _read_text_lines(path)
    if not lines or lines[0] != _ASSIGNMENT_HEADER:
        raise FormatError(f"{path}: line 1 must be the header {_ASSIGNMENT_HEADER!r}")
    rows = {}
    n_branches = None
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key == "branches":
                n_branches = int(value)
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}: line {ln}: expected 3 comma-separated fields")
        try:
            label, layer, branch = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"{path}: line {ln}: {exc}") from exc
        if label in rows:
            raise FormatError(f"{path}: line {ln}: duplicate label {label}")
        rows[label] = (layer, branch)
    n = len(rows)
    if n == 0:
        raise FormatError(f"{path}: no assignment rows found")
    if sorted(rows) != list(range(n)):
        raise FormatError(f"{path}: labels must cover 0..{n - 1} exactly")
    if n_branches is None:
        raise FormatError(f"{path}: missing #branches trailer")
    layers = np.array([rows[i][0] for i in range(n)], dtype=np.int32)
    branches = np.array([rows[i][1] for i in range(n)], dtype=np.int8)
    if layers.min() < 0:
        raise FormatError(f"{path}: negative layer")
    if branches.min() < 0 or branches.max() >= n_branches:
        raise FormatError(f"{path}: branch index outside 0..{n_branches - 1}")
    return LayerAssignment(layers=layers, branches=branches, n_branches=n_branches)


# --------------------------------------------------------------------------
# Ground truth binary format
# --------------------------------------------------------------------------


def save_ground_truth(gt: GroundTruth, path) -> None:
    nq, k = gt.labels.shape
    label_block = np.empty(nq, dtype=np.dtype([("k", "<u4"), ("labels", "<u4", (k,))]))
    label_block["k"] = k
    label_block["labels"] = gt.labels
    dist_block = np.empty(nq, dtype=np.dtype([("k", "<u4"), ("dists", "<f4", (k,))]))
    dist_block["k"] = k
    dist_block["dists"] = gt.distances
    Path(path).write_bytes(label_block.tobytes() + dist_block.tobytes())
    Path(str(path) + ".meta").write_text(
        f"k_gt={k} base_sha256={gt.base_checksum} query_sha256={gt.query_checksum}\n"
    )


def load_ground_truth(path) -> GroundTruth:
    raw = Path(path).read_bytes()
    meta_path = Path(str(path) + ".meta")
    if not meta_path.exists():
        raise FormatError(f"{path}: missing checksum sidecar {meta_path}")
    try:
        meta_text = meta_path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{meta_path}: not a text file ({exc})") from exc
    fields = dict(part.split("=", 1) for part in meta_text.split() if "=" in part)
    try:
        k = int(fields["k_gt"])
        base_ck = fields["base_sha256"]
        query_ck = fields["query_sha256"]
    except KeyError as exc:
        raise FormatError(f"{meta_path}: missing field {exc}") from exc
    record = 4 + 4 * k
    if len(raw) % (2 * record) != 0:
        raise FormatError(f"{path}: length {len(raw)} does not hold paired label/distance blocks")
    nq = len(raw) // (2 * record)
    label_block = np.frombuffer(
        raw, dtype=np.dtype([("k", "<u4"), ("labels", "<u4", (k,))]), count=nq
    )
    dist_block = np.frombuffer(
        raw,
        dtype=np.dtype([("k", "<u4"), ("dists", "<f4", (k,))]),
        count=nq,
        offset=nq * record,
    )
    if not np.all(label_block["k"] == k):
        bad = int(np.argmax(label_block["k"] != k))
        raise FormatError(f"{path}: row {bad} declares k={int(label_block['k'][bad])}, expected {k}")
    if not np.all(dist_block["k"] == k):
        bad = int(np.argmax(dist_block["k"] != k))
        raise FormatError(
            f"{path}: distance row {bad} declares k={int(dist_block['k'][bad])}, expected {k}"
        )
    dists = dist_block["dists"].astype(np.float64)
    if np.any(np.diff(dists, axis=1) < 0):
        raise FormatError(f"{path}: distance rows are not ascending")
    return GroundTruth(
        labels=label_block["labels"].astype(np.int64),
        distances=dists,
        k_gt=k,
        base_checksum=base_ck,
        query_checksum=query_ck,
    )


# --------------------------------------------------------------------------
# Index snapshots
# --------------------------------------------------------------------------


def save_index(index: HnswIndex, path) -> None:
    """Binary snapshot of a fully built index.

    Layout: magic, u32 (dim, n, top_l, m, m0, variant tag), the float32
    vector block, per-node (layer, branch) byte pairs, then per-layer
    adjacency as (u32 degree, u32 labels...) per node for every layer.
    Entry points and search-time parameters are not persisted.
    """
    if index.capacity is None or index.count != index.capacity:
        raise InputError("only fully built indexes can be snapshotted")
    cfg = index.config
    n = index.count
    parts = [
        SNAPSHOT_MAGIC,
        struct.pack("<6I", index.dim, n, cfg.top_l, cfg.m, cfg.m0, _VARIANT_TAGS[cfg.variant]),
        np.ascontiguousarray(index._vectors[:n], dtype="<f4").tobytes(),
        np.stack(
            [index.node_layers[:n].astype(np.uint8), index.node_branches[:n].astype(np.uint8)],
            axis=1,
        ).tobytes(),
    ]
    for layer in range(cfg.top_l):
        for node in range(n):
            if layer == 0:
                row = index._base_adj[node, : index._base_deg[node]]
            else:
                branch = index.branches[int(index.node_branches[node])]
                row = branch.layers.get(layer, {}).get(node)
                if row is None:
                    row = np.empty(0, dtype=np.int32)
            parts.append(struct.pack("<I", row.size))
            parts.append(row.astype("<u4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_index(
    path, profile: LidProfile | None = None, **config_overrides
) -> HnswIndex:
    """Rebuild an index from a snapshot.

    Search-time parameters are not stored in the file; pass them as
    overrides (ef_search, lid_threshold, ...) when they matter. Entry
    points are reconstructed as the lowest label on each branch's
    highest occupied layer. The loaded structure is re-validated and a
    corrupt file raises FormatError.
    """
    raw = Path(path).read_bytes()
    if len(raw) < len(SNAPSHOT_MAGIC) or raw[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: bad magic bytes at offset 0")
    offset = len(SNAPSHOT_MAGIC)
    if len(raw) < offset + 24:
        raise FormatError(f"{path}: truncated header at byte {offset}")
    dim, n, top_l, m, m0, tag = struct.unpack_from("<6I", raw, offset)
    offset += 24
    if dim == 0 or top_l == 0 or m == 0:
        raise FormatError(f"{path}: zero dimension, top_l, or m in header")
    if tag >= len(VARIANTS):
        raise FormatError(f"{path}: unknown variant tag {tag}")
    variant = VARIANTS[tag]
    overrides = {
        "ef_construction": max(128, m),
        "ef_search": 64,
        **config_overrides,
    }
    config = IndexConfig(m=m, m0=m0, top_l=top_l, variant=variant, **overrides)

    vec_bytes = n * dim * 4
    if len(raw) < offset + vec_bytes + 2 * n:
        raise FormatError(f"{path}: truncated vector block at byte {offset}")
    vectors = (
        np.frombuffer(raw, dtype="<f4", count=n * dim, offset=offset)
        .reshape(n, dim)
        .astype(np.float32)
    )
    offset += vec_bytes
    lb = np.frombuffer(raw, dtype=np.uint8, count=2 * n, offset=offset).reshape(n, 2)
    offset += 2 * n
    layers = lb[:, 0].astype(np.int16)
    branches = lb[:, 1].astype(np.int8)
    if n and layers.max(initial=0) >= top_l:
        raise FormatError(f"{path}: node layer exceeds top_l")
    if n and branches.max(initial=0) >= config.n_branches:
        raise FormatError(f"{path}: node branch exceeds the variant's branch count")

    index = HnswIndex(dim, config, profile=profile)
    index._bind(n)
    index._vectors[:] = vectors
    index.node_layers[:] = layers
    index.node_branches[:] = branches
    index.count = n
    index._base_entry = 0 if n else None

    for layer in range(top_l):
        for node in range(n):
            if offset + 4 > len(raw):
                raise FormatError(f"{path}: truncated adjacency at byte {offset}")
            (deg,) = struct.unpack_from("<I", raw, offset)
            offset += 4
            cap = m0 if layer == 0 else m
            if deg > cap:
                raise FormatError(
                    f"{path}: degree {deg} exceeds cap {cap} for node {node} at byte {offset - 4}"
                )
            if offset + 4 * deg > len(raw):
                raise FormatError(f"{path}: truncated adjacency row at byte {offset}")
            row = np.frombuffer(raw, dtype="<u4", count=deg, offset=offset).astype(np.int32)
            offset += 4 * deg
            if deg and row.max() >= n:
                raise FormatError(f"{path}: edge target out of range for node {node}")
            if layer == 0:
                index._base_adj[node, :deg] = row
                index._base_deg[node] = deg
            else:
                present = layers[node] >= layer
                if deg and not present:
                    raise FormatError(
                        f"{path}: node {node} has edges at layer {layer} it does not occupy"
                    )
                if present:
                    branch = index.branches[int(branches[node])]
                    branch.layers.setdefault(layer, {})[node] = row
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} trailing bytes at byte {offset}")

    for bi, branch in enumerate(index.branches):
        members = np.flatnonzero(index.node_branches[:n] == bi)
        if members.size:
            top = int(index.node_layers[members].max())
            at_top = members[index.node_layers[members] == top]
            branch.entry_point = int(at_top.min())
            branch.entry_layer = top
    violations = index.check_invariants()
    if violations:
        raise FormatError(f"{path}: snapshot violates index invariants: {violations[:3]}")
    return index
